#include <cstdio>

int main() {
  std::puts("episim: CLI not wired up yet");
  return 1;
}
