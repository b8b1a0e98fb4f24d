#include <cstdio>

int main() {
  std::puts("fractalwalk: not wired yet");
  return 0;
}
