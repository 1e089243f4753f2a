#include <doctest.h>

TEST_SUITE_BEGIN("map");
TEST_SUITE_END();
