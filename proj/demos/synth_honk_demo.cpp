#include <iostream>
int main() { std::cout << "demo placeholder\n"; return 0; }
