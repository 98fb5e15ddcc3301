#include <cstdio>

int main() {
  std::puts("filament: subcommands not wired yet");
  return 0;
}
