#include <doctest.h>

TEST_SUITE_BEGIN("latent");
TEST_SUITE_END();
