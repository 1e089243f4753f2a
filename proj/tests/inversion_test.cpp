#include <doctest.h>

TEST_SUITE_BEGIN("inversion");
TEST_SUITE_END();
