#include "doctest.h"

#include "gridse/types.hpp"

#include "helpers.hpp"

using namespace gridse;

TEST_CASE("bus index maps file ids to dense positions") {
    GridCase c = testsup::three_bus_mixed();
    c.buses[0].id = 101;
    c.buses[1].id = 7;
    c.buses[2].id = 55;
    c.branches.clear();
    c.branches.push_back({101, 7, 0.01, 0.1, 0.0, 1.0, 0.0, true});
    c.branches.push_back({7, 55, 0.01, 0.1, 0.0, 1.0, 0.0, true});
    c.gens[0].bus = 101;
    c.gens[1].bus = 7;
    BusIndex idx = make_bus_index(c);
    CHECK(idx.at(101) == 0);
    CHECK(idx.at(7) == 1);
    CHECK(idx.at(55) == 2);
    CHECK(idx.size() == 3);
}

TEST_CASE("duplicate bus ids are rejected") {
    GridCase c = testsup::two_bus_case();
    c.buses[1].id = c.buses[0].id;
    CHECK_THROWS_AS(make_bus_index(c), ValidationError);
}

TEST_CASE("slack index requires exactly one slack bus") {
    GridCase c = testsup::two_bus_case();
    CHECK(slack_index(c) == 0);

    c.buses[1].kind = BusKind::slack;
    CHECK_THROWS_AS(slack_index(c), ValidationError);

    c.buses[0].kind = BusKind::pq;
    c.buses[1].kind = BusKind::pq;
    CHECK_THROWS_AS(slack_index(c), ValidationError);
}

TEST_CASE("validate accepts the hand-built cases") {
    CHECK_NOTHROW(validate(testsup::two_bus_case()));
    CHECK_NOTHROW(validate(testsup::three_bus_mixed()));
}

TEST_CASE("validate rejects broken cases") {
    SUBCASE("non-positive base MVA") {
        GridCase c = testsup::two_bus_case();
        c.base_mva = 0.0;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("dangling branch endpoint") {
        GridCase c = testsup::two_bus_case();
        c.branches[0].to = 99;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("self loop") {
        GridCase c = testsup::two_bus_case();
        c.branches[0].to = c.branches[0].from;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("zero impedance branch") {
        GridCase c = testsup::two_bus_case();
        c.branches[0].r = 0.0;
        c.branches[0].x = 0.0;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("non-positive tap") {
        GridCase c = testsup::two_bus_case();
        c.branches[0].tap = -1.0;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("non-positive initial voltage") {
        GridCase c = testsup::two_bus_case();
        c.buses[1].vm_init = 0.0;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("generator at unknown bus") {
        GridCase c = testsup::two_bus_case();
        c.gens[0].bus = 42;
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("slack bus without a generator") {
        GridCase c = testsup::two_bus_case();
        c.gens.clear();
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("pv bus without a generator") {
        GridCase c = testsup::three_bus_mixed();
        c.gens.pop_back();
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("two generators at one bus") {
        GridCase c = testsup::two_bus_case();
        c.gens.push_back({1, 0.1, 0.0, 1.02});
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
    SUBCASE("non-finite load") {
        GridCase c = testsup::two_bus_case();
        c.buses[1].pd = std::nan("");
        CHECK_THROWS_AS(validate(c), ValidationError);
    }
}

TEST_CASE("structural equality is field-exact with one-ulp angle slack") {
    GridCase a = testsup::three_bus_mixed();
    GridCase b = a;
    CHECK(structurally_equal(a, b));

    SUBCASE("converted fields absorb rounding, not real differences") {
        b.branches[1].shift = std::nextafter(a.branches[1].shift, 1.0);
        CHECK(structurally_equal(a, b));
        b.branches[1].shift = a.branches[1].shift * (1.0 + 1e-12);
        CHECK_FALSE(structurally_equal(a, b));
    }
    SUBCASE("fields stored verbatim are exact") {
        b.branches[0].x = std::nextafter(a.branches[0].x, 1.0);
        CHECK_FALSE(structurally_equal(a, b));
    }
    SUBCASE("bus count differs") {
        b.buses.pop_back();
        CHECK_FALSE(structurally_equal(a, b));
    }
    SUBCASE("load differs") {
        b.buses[2].pd += 1e-12;
        CHECK_FALSE(structurally_equal(a, b));
    }
}
