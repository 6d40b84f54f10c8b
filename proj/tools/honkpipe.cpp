#include <iostream>
int main() { std::cout << "honkpipe placeholder\n"; return 0; }
