#include <doctest.h>

TEST_SUITE_BEGIN("experiment");
TEST_SUITE_END();
