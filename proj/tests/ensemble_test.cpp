#include <doctest.h>

TEST_SUITE_BEGIN("ensemble");
TEST_SUITE_END();
