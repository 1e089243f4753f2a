#include <doctest.h>

TEST_SUITE_BEGIN("field_gen");
TEST_SUITE_END();
