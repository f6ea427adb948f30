#include "advinv/core.hpp"
#include "advinv/grid.hpp"

#include <gtest/gtest.h>

using namespace advinv;

TEST(Grid, SixByElevenHasPaperTimesAndTenthSpacing)
{
    const auto g = make_grid(6, 11);
    ASSERT_EQ(g.M(), 6u);
    ASSERT_EQ(g.N(), 11u);
    const double times[] = {0, 2, 4, 6, 8, 10};
    for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g.times[i], times[i]);
    for (std::size_t j = 0; j < 11; ++j) EXPECT_NEAR(g.positions[j], 0.1 * static_cast<double>(j), 1e-15);
}

TEST(Grid, TwoByTwoIsTheCorners)
{
    const auto g = make_grid(2, 2);
    EXPECT_EQ(g.times, (std::vector<double>{0.0, 10.0}));
    EXPECT_EQ(g.positions, (std::vector<double>{0.0, 1.0}));
}

TEST(Grid, RejectsDegenerateSizes)
{
    EXPECT_THROW(make_grid(1, 11), ConfigError);
    EXPECT_THROW(make_grid(6, 1), ConfigError);
}

TEST(Grid, ValidateCatchesBrokenInvariants)
{
    auto g = make_grid(3, 4);
    EXPECT_NO_THROW(validate_grid(g));
    g.positions[1] = g.positions[2];
    EXPECT_THROW(validate_grid(g), ContractError);
    g = make_grid(3, 4);
    g.times.back() = 11.0;
    EXPECT_THROW(validate_grid(g), ContractError);
}

TEST(Core, ParameterValidity)
{
    EXPECT_TRUE((ParameterVector{0.3, 0.5}).valid());
    EXPECT_FALSE((ParameterVector{0.0, 0.5}).valid());
    EXPECT_FALSE((ParameterVector{0.3, -1.0}).valid());
    EXPECT_FALSE((ParameterVector{std::nan(""), 1.0}).valid());
    EXPECT_TRUE(ParameterBox{}.contains({10.0, 0.0}));
    EXPECT_FALSE(ParameterBox{}.contains({10.5, 1.0}));
}

TEST(Core, InitialConditionNames)
{
    EXPECT_EQ(parse_initial_condition("d"), InitialCondition::Discontinuous);
    EXPECT_EQ(parse_initial_condition("continuous"), InitialCondition::Continuous);
    EXPECT_THROW(parse_initial_condition("x"), ConfigError);
    EXPECT_EQ(default_theta0(InitialCondition::Discontinuous), (ParameterVector{0.3, 0.5}));
    EXPECT_EQ(default_theta0(InitialCondition::Continuous), (ParameterVector{0.3, 0.4}));
}

TEST(Core, ShapeMismatchIsAContractError)
{
    EXPECT_THROW(require_same_shape(Matrix(2, 3), Matrix(3, 2), "t"), ContractError);
    EXPECT_NO_THROW(require_same_shape(Matrix(2, 3), Matrix(2, 3), "t"));
}
