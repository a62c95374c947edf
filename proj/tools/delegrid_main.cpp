#include <iostream>

#include "delegrid/delegrid.hpp"

int main() {
  std::cout << "delegrid " << delegrid::kArtifactVersion << "\n";
  return 0;
}
