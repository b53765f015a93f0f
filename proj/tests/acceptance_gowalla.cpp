#include <iostream>

#include "gowalla.hpp"

int main() {
  auto dir = graphrec::test::gowalla_dir();
  if (!dir) {
    std::cout << "SKIP 7 Gowalla split not found; set GRAPHREC_GOWALLA_DIR to a directory with train.txt and test.txt\n";
    return 77;
  }
  auto r = graphrec::test::run_gowalla(*dir);
  std::cout << (r.pass ? "PASS" : "FAIL") << " 7 " << r.detail << '\n';
  return r.pass ? 0 : 1;
}
