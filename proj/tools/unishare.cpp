#include <cstdio>

int main() {
  std::printf("unishare: pipeline stages not wired yet\n");
  return 2;
}
