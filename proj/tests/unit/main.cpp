#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "atcor/common/log.hpp"

int main(int argc, char** argv) {
  atcor::log::set_level(atcor::log::Level::error);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
