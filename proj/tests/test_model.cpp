#include <doctest.h>

#include <stdexcept>

#include "test_helpers.hpp"
#include "wattvm/model.hpp"

using namespace wattvm;
using namespace wattvm::test;

TEST_CASE("ladder enumerates the stock five levels") {
    const FrequencyLadder ladder = stock_ladder();
    ladder.validate();
    REQUIRE(ladder.level_count() == 5);
    const std::vector<double> expected = {1.8, 2.0, 2.2, 2.4, 2.6};
    const auto levels = ladder.levels();
    REQUIRE(levels.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i)
        CHECK(levels[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("ladder membership round-trips every enumerated level") {
    const FrequencyLadder ladder = stock_ladder();
    for (int i = 0; i < ladder.level_count(); ++i) {
        const double f = ladder.level(i);
        CHECK(ladder.contains(f));
        CHECK(ladder.index_of(f) == i);
    }
    CHECK_FALSE(ladder.contains(2.5));
    CHECK_FALSE(ladder.contains(1.6));
    CHECK_FALSE(ladder.contains(2.8));
}

TEST_CASE("ladder rejects malformed ranges") {
    CHECK_THROWS_AS((FrequencyLadder{0.0, 1.8, 2.6, 0.2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((FrequencyLadder{1.0, 2.6, 1.8, 0.2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((FrequencyLadder{1.0, 1.8, 2.6, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((FrequencyLadder{1.0, 1.8, 2.6, 0.3}).validate(), std::invalid_argument);
    CHECK_NOTHROW((FrequencyLadder{1.0, 1.8, 1.8, 0.2}).validate());
}

TEST_CASE("utilisation weighs cores and ram uniformly") {
    const PhysicalMachine pm = make_pm("pm1", 4, 32);
    SUBCASE("empty host") { CHECK(utilisation(pm, {}) == 0.0); }
    SUBCASE("one sixteenth-gig single-core vm") {
        const VirtualMachine vm = make_vm("vm1", 1, 16, 0.5);
        CHECK(utilisation(pm, {&vm}) == doctest::Approx(0.375).epsilon(1e-12));
    }
    SUBCASE("fully packed host") {
        const VirtualMachine a = make_vm("vm1", 2, 16, 0.0);
        const VirtualMachine b = make_vm("vm2", 2, 16, 1.0);
        CHECK(utilisation(pm, {&a, &b}) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("capacity violation is rejected") {
        const VirtualMachine big = make_vm("vm1", 8, 8, 0.0);
        CHECK_THROWS_AS(utilisation(pm, {&big}), std::invalid_argument);
    }
}

namespace {

Inventory small_inventory() {
    Inventory inv;
    inv.pms.emplace("pm1", make_pm("pm1", 4, 32));
    inv.pms.emplace("pm2", make_pm("pm2", 2, 16));
    inv.vms.emplace("vm1", make_vm("vm1", 1, 8, 0.2));
    inv.vms.emplace("vm2", make_vm("vm2", 1, 8, 0.9));
    return inv;
}

CloudState valid_state(const Inventory& inv) {
    CloudState s;
    for (const auto& [pm_id, pm] : inv.pms) s.frequency_ghz[pm_id] = 2.6;
    s.allocation["vm1"] = "pm1";
    s.allocation["vm2"] = "pm1";
    s.suspended.insert("pm2");
    return s;
}

}  // namespace

TEST_CASE("validate_state accepts a valid state and the empty state") {
    const Inventory inv = small_inventory();
    CHECK(validate_state(valid_state(inv), inv, stock_ladder()).empty());

    CloudState empty;
    for (const auto& [pm_id, pm] : inv.pms) empty.frequency_ghz[pm_id] = 1.8;
    CHECK(validate_state(empty, inv, stock_ladder()).empty());
}

TEST_CASE("validate_state reports each violation with the offending ids") {
    const Inventory inv = small_inventory();
    const FrequencyLadder ladder = stock_ladder();

    SUBCASE("vm on a suspended pm") {
        CloudState s = valid_state(inv);
        s.allocation["vm2"] = "pm2";  // pm2 is suspended
        const auto violations = validate_state(s, inv, ladder);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].code == "suspended_host");
        CHECK(violations[0].message.find("vm2") != std::string::npos);
        CHECK(violations[0].message.find("pm2") != std::string::npos);
    }
    SUBCASE("off-ladder frequency") {
        CloudState s = valid_state(inv);
        s.frequency_ghz["pm1"] = 2.5;
        const auto violations = validate_state(s, inv, ladder);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].code == "off_ladder_frequency");
        CHECK(violations[0].message.find("pm1") != std::string::npos);
    }
    SUBCASE("overcommit") {
        Inventory inv2 = small_inventory();
        inv2.vms.emplace("vm3", make_vm("vm3", 4, 32, 0.0));
        CloudState s = valid_state(inv2);
        s.allocation["vm3"] = "pm1";
        const auto violations = validate_state(s, inv2, ladder);
        REQUIRE(violations.size() == 2);  // cores and ram
        CHECK(violations[0].code == "core_overcommit");
        CHECK(violations[1].code == "ram_overcommit");
    }
    SUBCASE("unknown ids") {
        CloudState s = valid_state(inv);
        s.allocation["ghost"] = "pm1";
        s.suspended.insert("pm9");
        const auto violations = validate_state(s, inv, ladder);
        CHECK(violations.size() == 2);
    }
}

TEST_CASE("actions apply with precondition checks") {
    Inventory inv = small_inventory();
    const FrequencyLadder ladder = stock_ladder();
    CloudState s;
    for (const auto& [pm_id, pm] : inv.pms) {
        s.frequency_ghz[pm_id] = 2.6;
        s.suspended.insert(pm_id);
    }

    SUBCASE("place onto a suspended host fails") {
        CHECK_THROWS_AS(apply_action(s, Action::place("vm1", "pm1"), inv, ladder),
                        std::runtime_error);
    }
    SUBCASE("resume, place, migrate, suspend round trip") {
        apply_actions(s,
                      {Action::resume("pm1"), Action::place("vm1", "pm1"),
                       Action::resume("pm2"), Action::migrate("vm1", "pm2"),
                       Action::suspend("pm1"), Action::set_frequency("pm2", 1.8)},
                      inv, ladder);
        CHECK(s.allocation.at("vm1") == "pm2");
        CHECK(s.is_suspended("pm1"));
        CHECK(s.frequency_ghz.at("pm2") == doctest::Approx(1.8));
        CHECK(validate_state(s, inv, ladder).empty());
    }
    SUBCASE("suspend of a busy host fails") {
        apply_actions(s, {Action::resume("pm1"), Action::place("vm1", "pm1")}, inv, ladder);
        CHECK_THROWS_AS(apply_action(s, Action::suspend("pm1"), inv, ladder),
                        std::runtime_error);
    }
    SUBCASE("off-ladder frequency fails") {
        CHECK_THROWS_AS(apply_action(s, Action::set_frequency("pm1", 2.5), inv, ladder),
                        std::runtime_error);
    }
    SUBCASE("overcommitting placement is caught by the post-batch validation") {
        apply_actions(s, {Action::resume("pm2"), Action::place("vm1", "pm2")}, inv, ladder);
        inv.vms.emplace("vm9", make_vm("vm9", 2, 16, 0.0));
        apply_action(s, Action::place("vm9", "pm2"), inv, ladder);
        const auto violations = validate_state(s, inv, ladder);
        REQUIRE_FALSE(violations.empty());
        CHECK(violations[0].code == "core_overcommit");
    }
}
