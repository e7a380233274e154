#include <cstdio>
int main() { std::puts("bubble: cli under construction"); return 0; }
