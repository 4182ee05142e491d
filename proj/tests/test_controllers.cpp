#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "test_helpers.hpp"
#include "wattvm/controllers.hpp"
#include "wattvm/rng.hpp"

using namespace wattvm;
using namespace wattvm::test;

namespace {

struct Scenario {
    Inventory inv;
    CloudState state;
    GeoSnapshot geo;
    ModelParams params;
    ControllerSettings settings;
    std::vector<std::string> pending;

    ControllerContext ctx() const {
        ControllerContext c;
        c.inventory = &inv;
        c.state = &state;
        c.pending = pending;
        c.geo = &geo;
        c.params = &params;
        c.settings = settings;
        c.step_h = 1.0;
        return c;
    }

    void add_pm(const PhysicalMachine& pm, bool suspended = true) {
        inv.pms.emplace(pm.id, pm);
        state.frequency_ghz[pm.id] = params.ladder.max_ghz;
        if (suspended) state.suspended.insert(pm.id);
    }

    void add_dc(const std::string& id, double price, double temp) {
        geo.price_usd_per_kwh[id] = price;
        geo.temp_c[id] = temp;
    }

    void host(const VirtualMachine& vm, const std::string& pm_id) {
        inv.vms.emplace(vm.id, vm);
        state.allocation[vm.id] = pm_id;
        state.suspended.erase(pm_id);
    }

    void request(const VirtualMachine& vm) {
        inv.vms.emplace(vm.id, vm);
        pending.push_back(vm.id);
    }
};

Scenario base_scenario() {
    Scenario s;
    s.params = stock_params();
    s.params.cooling = no_cooling();  // effective rate equals the raw price
    return s;
}

std::vector<Action> actions_of_kind(const std::vector<Action>& actions, Action::Kind kind) {
    std::vector<Action> out;
    for (const auto& a : actions)
        if (a.kind == kind) out.push_back(a);
    return out;
}

}  // namespace

TEST_CASE("location cost ranks by effective delivered energy price") {
    const CoolingParams cooling = stock_cooling();
    SUBCASE("price marked up by the overhead") {
        CHECK(location_cost_rate(0.05, 15.0, cooling) == doctest::Approx(0.06).epsilon(1e-9));
    }
    SUBCASE("equal prices, hotter site ranks worse") {
        CHECK(location_cost_rate(0.05, 30.0, cooling) > location_cost_rate(0.05, 10.0, cooling));
    }
    SUBCASE("clamped overhead reduces ranking to price order") {
        const CoolingParams flat{0.2, 15.0, 0.0, 0.2, 0.2};
        CHECK(location_cost_rate(0.05, 40.0, flat) < location_cost_rate(0.06, -10.0, flat));
    }
}

TEST_CASE("migration stage: nothing to do means no actions") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.host(make_vm("vm1", 2, 16, 0.5), "pm1");  // util 0.5 >= threshold 0.4
    const ControllerResult r = bcf_migration_stage(s.ctx());
    CHECK(r.actions.empty());
    CHECK(r.unplaced.empty());
}

TEST_CASE("migration stage: new vm lands on the cheaper of two identical hosts") {
    Scenario s = base_scenario();
    s.add_dc("cheap", 0.05, 15.0);
    s.add_dc("dear", 0.07, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dear"));
    s.add_pm(make_pm("pm2", 4, 32, "cheap"));
    s.request(make_vm("vm1", 1, 8, 0.2));

    const ControllerResult r = bcf_migration_stage(s.ctx());
    REQUIRE(r.actions.size() == 2);
    CHECK(r.actions[0].kind == Action::Kind::Resume);
    CHECK(r.actions[0].subject == "pm2");
    CHECK(r.actions[1].kind == Action::Kind::Place);
    CHECK(r.actions[1].subject == "vm1");
    CHECK(r.actions[1].target_pm == "pm2");
}

TEST_CASE("migration stage: underutilised host is evacuated and suspended") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.add_pm(make_pm("pm2", 4, 32, "dc1"));
    s.host(make_vm("vmA", 1, 4.8, 0.2), "pm1");  // util 0.2 < 0.4
    s.host(make_vm("vmB", 2, 24, 0.5), "pm2");   // util 0.625, spare for vmA

    const ControllerResult r = bcf_migration_stage(s.ctx());
    REQUIRE(r.actions.size() == 2);
    CHECK(r.actions[0].kind == Action::Kind::Migrate);
    CHECK(r.actions[0].subject == "vmA");
    CHECK(r.actions[0].target_pm == "pm2");
    CHECK(r.actions[1].kind == Action::Kind::Suspend);
    CHECK(r.actions[1].subject == "pm1");
}

TEST_CASE("migration stage: evacuated vm returns to its host when nothing else fits") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.host(make_vm("vmA", 1, 4, 0.2), "pm1");  // util 0.1875 < 0.4, sole host
    const ControllerResult r = bcf_migration_stage(s.ctx());
    CHECK(r.actions.empty());  // placed back where it was, no churn
    CHECK(r.unplaced.empty());
}

TEST_CASE("migration stage: unplaceable vm is reported and skipped") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 2, 16, "dc1"));
    s.request(make_vm("vm_big", 4, 64, 0.2));
    s.request(make_vm("vm_ok", 1, 8, 0.2));

    const ControllerResult r = bcf_migration_stage(s.ctx());
    REQUIRE(r.unplaced.size() == 1);
    CHECK(r.unplaced[0] == "vm_big");
    const auto places = actions_of_kind(r.actions, Action::Kind::Place);
    REQUIRE(places.size() == 1);
    CHECK(places[0].subject == "vm_ok");
}

TEST_CASE("migration stage: larger hosts are activated before smaller cheap ones") {
    Scenario s = base_scenario();
    s.add_dc("cheap", 0.04, 15.0);
    s.add_dc("dear", 0.08, 15.0);
    s.add_pm(make_pm("pm_small", 2, 16, "cheap"));
    s.add_pm(make_pm("pm_large", 4, 32, "dear"));
    s.request(make_vm("vm1", 1, 8, 0.2));

    const ControllerResult r = bcf_migration_stage(s.ctx());
    const auto places = actions_of_kind(r.actions, Action::Kind::Place);
    REQUIRE(places.size() == 1);
    CHECK(places[0].target_pm == "pm_large");  // capacity sorts before cost
}

TEST_CASE("scaling stage: io-bound host is scaled to the bottom of the ladder") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.host(make_vm("vm1", 1, 16, 0.0), "pm1");
    s.host(make_vm("vm2", 1, 8, 0.0), "pm1");

    const auto actions = frequency_scaling_stage(s.ctx(), s.state);
    REQUIRE(actions.size() == 1);
    CHECK(actions[0].kind == Action::Kind::SetFrequency);
    CHECK(actions[0].subject == "pm1");
    CHECK(actions[0].target_freq_ghz == doctest::Approx(1.8));
}

TEST_CASE("scaling stage: cpu-bound host stays at the top when losses exceed savings") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 1, 1, "dc1"));
    s.host(make_vm("vm1", 1, 1, 1.0), "pm1");  // util 1, loss 0.0036/h > savings ~0.001/h

    const auto actions = frequency_scaling_stage(s.ctx(), s.state);
    CHECK(actions.empty());
}

TEST_CASE("scaling stage: empty active set means no actions") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    CHECK(frequency_scaling_stage(s.ctx(), s.state).empty());
}

namespace {

// Scenario for the pruning rule: pm1 fails its first step; pm2 would
// accept one but is dominated by pm1 (higher mean beta, cheaper, cooler).
Scenario pruning_scenario() {
    Scenario s = base_scenario();
    s.add_dc("dc_r", 0.05, 20.0);
    s.add_dc("dc_d", 0.045, 10.0);
    s.add_pm(make_pm("pm1", 8, 48, "dc_r"));
    for (int i = 0; i < 6; ++i)
        s.host(make_vm("vmr" + std::to_string(i), 1, 6.8, 0.2), "pm1");
    s.add_pm(make_pm("pm2", 1, 1, "dc_d"));
    s.host(make_vm("vmd", 1, 1, 0.25), "pm2");
    return s;
}

}  // namespace

TEST_CASE("scaling stage: dominated host is pruned after a failed decrease") {
    Scenario s = pruning_scenario();

    SUBCASE("per-host feasibility flag prunes the dominated host") {
        const auto actions = frequency_scaling_stage(s.ctx(), s.state);
        CHECK(actions.empty());  // pm1 failed, pm2 pruned before its walk
    }
    SUBCASE("without domination the second host scales") {
        s.geo.temp_c["dc_d"] = 25.0;  // hotter than dc_r, predicate no longer holds
        const auto actions = frequency_scaling_stage(s.ctx(), s.state);
        REQUIRE(actions.size() == 1);
        CHECK(actions[0].subject == "pm2");
        CHECK(actions[0].target_freq_ghz == doctest::Approx(2.4));
    }
    SUBCASE("literal flag semantics disable pruning after any earlier success") {
        // An io-bound host processed first flips the flag for the whole pass.
        s.add_pm(make_pm("pm0", 4, 32, "dc_r"));
        s.host(make_vm("vm0", 2, 16, 0.0), "pm0");
        s.settings.literal_feasible_flag = true;
        const auto actions = frequency_scaling_stage(s.ctx(), s.state);
        // pm0 scales to the bottom, pm1 stays, pm2 is not pruned and scales.
        REQUIRE(actions.size() == 2);
        CHECK(actions[0].subject == "pm0");
        CHECK(actions[0].target_freq_ghz == doctest::Approx(1.8));
        CHECK(actions[1].subject == "pm2");
        CHECK(actions[1].target_freq_ghz == doctest::Approx(2.4));
    }
    SUBCASE("per-host semantics keep pruning despite an earlier success") {
        s.add_pm(make_pm("pm0", 4, 32, "dc_r"));
        s.host(make_vm("vm0", 2, 16, 0.0), "pm0");
        const auto actions = frequency_scaling_stage(s.ctx(), s.state);
        REQUIRE(actions.size() == 1);
        CHECK(actions[0].subject == "pm0");
    }
}

TEST_CASE("scaling stage keeps fully cpu-bound hosts at the top frequency") {
    // With the stock pricing weights, a host whose VMs all track the host
    // frequency loses more revenue per step than any energy saving worth up
    // to 0.1 $/kWh (even with the worst cooling markup) can recover.
    Rng rng(51);
    for (int trial = 0; trial < 100; ++trial) {
        Scenario s = base_scenario();
        s.params.cooling = stock_cooling();
        s.add_dc("dc0", rng.uniform(0.001, 0.1), rng.uniform(-10.0, 45.0));
        const int cores = static_cast<int>(rng.uniform_int(1, 8));
        const double ram = static_cast<double>(rng.uniform_int(8, 64));
        s.add_pm(make_pm("pm0", cores, ram, "dc0"));
        const int n = static_cast<int>(rng.uniform_int(1, cores));
        for (int v = 0; v < n; ++v)
            s.host(make_vm("vm" + std::to_string(v), 1, ram / n, 1.0), "pm0");
        CHECK(frequency_scaling_stage(s.ctx(), s.state).empty());
    }
}

TEST_CASE("bfd: best fit picks the tightest host, ties break on id") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.add_pm(make_pm("pm2", 4, 32, "dc1"));
    s.host(make_vm("vmx", 2, 20, 0.5), "pm1");  // free 0.4375
    s.host(make_vm("vmy", 1, 8, 0.5), "pm2");   // free 0.75

    SUBCASE("tightest host wins") {
        s.request(make_vm("vm1", 1, 4, 0.2));
        const ControllerResult r = bfd_controller(s.ctx());
        const auto places = actions_of_kind(r.actions, Action::Kind::Place);
        REQUIRE(places.size() == 1);
        CHECK(places[0].target_pm == "pm1");
    }
    SUBCASE("no pending means no actions") {
        const ControllerResult r = bfd_controller(s.ctx());
        CHECK(r.actions.empty());
    }
    SUBCASE("identical spare capacity goes to the lower id") {
        Scenario t = base_scenario();
        t.add_dc("dc1", 0.05, 15.0);
        t.add_pm(make_pm("pm1", 4, 32, "dc1"));
        t.add_pm(make_pm("pm2", 4, 32, "dc1"));
        t.host(make_vm("vma", 1, 8, 0.5), "pm1");
        t.host(make_vm("vmb", 1, 8, 0.5), "pm2");
        t.request(make_vm("vm1", 1, 4, 0.2));
        const ControllerResult r = bfd_controller(t.ctx());
        const auto places = actions_of_kind(r.actions, Action::Kind::Place);
        REQUIRE(places.size() == 1);
        CHECK(places[0].target_pm == "pm1");
    }
}

TEST_CASE("bfd: never migrates and never scales") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm1", 4, 32, "dc1"));
    s.add_pm(make_pm("pm2", 4, 32, "dc1"));
    s.host(make_vm("vmA", 1, 4, 0.0), "pm1");  // deeply underutilised
    s.host(make_vm("vmB", 2, 24, 0.0), "pm2");
    s.request(make_vm("vm1", 1, 8, 0.2));

    const ControllerResult r = bfd_controller(s.ctx());
    CHECK(actions_of_kind(r.actions, Action::Kind::Migrate).empty());
    CHECK(actions_of_kind(r.actions, Action::Kind::SetFrequency).empty());
}

TEST_CASE("bfd: activates the largest inactive host when nothing fits") {
    Scenario s = base_scenario();
    s.add_dc("dc1", 0.05, 15.0);
    s.add_pm(make_pm("pm_small", 2, 16, "dc1"));
    s.add_pm(make_pm("pm_large", 4, 32, "dc1"));
    s.request(make_vm("vm1", 1, 8, 0.2));

    const ControllerResult r = bfd_controller(s.ctx());
    REQUIRE(r.actions.size() == 2);
    CHECK(r.actions[0].kind == Action::Kind::Resume);
    CHECK(r.actions[0].subject == "pm_large");
    CHECK(r.actions[1].target_pm == "pm_large");
}

TEST_CASE("bcffs composes the two stages") {
    SUBCASE("stage-1 no-op leaves only frequency actions") {
        Scenario s = base_scenario();
        s.add_dc("dc1", 0.05, 15.0);
        s.add_pm(make_pm("pm1", 4, 32, "dc1"));
        s.host(make_vm("vm1", 2, 16, 0.0), "pm1");
        const ControllerResult r = bcffs_controller(s.ctx());
        REQUIRE_FALSE(r.actions.empty());
        for (const auto& a : r.actions) CHECK(a.kind == Action::Kind::SetFrequency);
    }
    SUBCASE("io-bound workload: placement equals bcf plus bottom frequencies") {
        Scenario s = base_scenario();
        s.add_dc("dc1", 0.05, 15.0);
        s.add_pm(make_pm("pm1", 4, 32, "dc1"));
        s.add_pm(make_pm("pm2", 4, 32, "dc1"));
        s.request(make_vm("vm1", 1, 16, 0.0));
        s.request(make_vm("vm2", 1, 12, 0.0));

        const ControllerResult bcf = bcf_controller(s.ctx());
        const ControllerResult bcffs = bcffs_controller(s.ctx());
        REQUIRE(bcffs.actions.size() >= bcf.actions.size());
        for (size_t i = 0; i < bcf.actions.size(); ++i) {
            CHECK(bcf.actions[i].kind == bcffs.actions[i].kind);
            CHECK(bcf.actions[i].subject == bcffs.actions[i].subject);
            CHECK(bcf.actions[i].target_pm == bcffs.actions[i].target_pm);
        }
        for (size_t i = bcf.actions.size(); i < bcffs.actions.size(); ++i) {
            CHECK(bcffs.actions[i].kind == Action::Kind::SetFrequency);
            CHECK(bcffs.actions[i].target_freq_ghz == doctest::Approx(1.8));
        }
    }
    SUBCASE("disabled scaling reproduces bcf exactly") {
        Scenario s = base_scenario();
        s.add_dc("dc1", 0.05, 15.0);
        s.add_pm(make_pm("pm1", 4, 32, "dc1"));
        s.request(make_vm("vm1", 1, 16, 0.3));
        s.settings.frequency_scaling = false;

        const ControllerResult bcf = bcf_controller(s.ctx());
        const ControllerResult bcffs = bcffs_controller(s.ctx());
        REQUIRE(bcf.actions.size() == bcffs.actions.size());
        for (size_t i = 0; i < bcf.actions.size(); ++i) {
            CHECK(bcf.actions[i].kind == bcffs.actions[i].kind);
            CHECK(bcf.actions[i].subject == bcffs.actions[i].subject);
        }
    }
}

namespace {

// Random but valid scenario: hosts across up to three locations, a few
// hosted VMs, a few pending ones.
Scenario random_scenario(Rng& rng, bool single_location) {
    Scenario s = base_scenario();
    const int ndc = single_location ? 1 : static_cast<int>(rng.uniform_int(1, 3));
    for (int d = 0; d < ndc; ++d)
        s.add_dc("dc" + std::to_string(d), rng.uniform(0.01, 0.5), rng.uniform(-5.0, 35.0));

    const int npm = static_cast<int>(rng.uniform_int(1, 4));
    for (int p = 0; p < npm; ++p) {
        const int cores = static_cast<int>(rng.uniform_int(1, 8));
        const double ram = static_cast<double>(rng.uniform_int(4, 64));
        s.add_pm(make_pm("pm" + std::to_string(p), cores, ram,
                         "dc" + std::to_string(rng.uniform_int(0, ndc - 1))));
    }
    const int nvm = static_cast<int>(rng.uniform_int(0, 6));
    for (int v = 0; v < nvm; ++v) {
        const double beta = rng.uniform01() < 0.4 ? rng.uniform(0.0, 0.1) : rng.uniform01();
        const VirtualMachine vm = make_vm("vm" + std::to_string(v),
                                          static_cast<int>(rng.uniform_int(1, 2)),
                                          static_cast<double>(rng.uniform_int(1, 32)), beta);
        if (rng.uniform01() < 0.7) {
            // try to host it somewhere
            std::vector<std::string> pms;
            for (const auto& [id, pm] : s.inv.pms) pms.push_back(id);
            const size_t start = rng.uniform_int(0, static_cast<long>(pms.size()) - 1);
            bool placed = false;
            for (size_t k = 0; k < pms.size() && !placed; ++k) {
                const auto& pm_id = pms[(start + k) % pms.size()];
                const auto& pm = s.inv.pms.at(pm_id);
                double used_cores = 0, used_ram = 0;
                for (const auto& [vid, pid] : s.state.allocation) {
                    if (pid != pm_id) continue;
                    used_cores += s.inv.vms.at(vid).cores;
                    used_ram += s.inv.vms.at(vid).ram_gb;
                }
                if (used_cores + vm.cores <= pm.cores && used_ram + vm.ram_gb <= pm.ram_gb) {
                    s.host(vm, pm_id);
                    placed = true;
                }
            }
            if (!placed) s.request(vm);
        } else {
            s.request(vm);
        }
    }
    return s;
}

// Independent check for the scaling stage: walk the gross profit down the
// ladder and stop at the first non-improving step.
int prefix_optimal_level(const Scenario& s, const std::string& pm_id) {
    const auto hosted = s.state.hosted_by_pm(s.inv);
    const auto& vms = hosted.at(pm_id);
    const auto& pm = s.inv.pms.at(pm_id);
    const FrequencyLadder& ladder = s.params.ladder;
    const double util = utilisation(pm, vms, s.params.weights);
    const double rate = location_cost_rate(s.geo.price_usd_per_kwh.at(pm.location),
                                           s.geo.temp_c.at(pm.location), s.params.cooling);
    auto profit = [&](int level) {
        const double f = ladder.level(level);
        const double revenue = pm_revenue_usd_h(f, vms, ladder, s.params.pricing);
        const double cost = pm_power_w(f, util, s.params.power.cubic, ladder) / 1000.0 * rate;
        return (revenue - cost) * s.settings.evaluation_window_h;
    };
    int level = ladder.level_count() - 1;
    while (level > 0 && profit(level - 1) > profit(level)) --level;
    return level;
}

}  // namespace

TEST_CASE("scaling stage matches the exhaustive profit walk on random single-location cases") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const Scenario s = random_scenario(rng, /*single_location=*/true);
        CloudState post = s.state;
        const auto actions = frequency_scaling_stage(s.ctx(), post);
        apply_actions(post, actions, s.inv, s.params.ladder);
        const auto hosted = post.hosted_by_pm(s.inv);
        for (const auto& [pm_id, vms] : hosted) {
            if (vms.empty()) continue;
            const int expected = prefix_optimal_level(s, pm_id);
            const int got = s.params.ladder.index_of(post.frequency_ghz.at(pm_id));
            CHECK(got == expected);
        }
    }
}

TEST_CASE("controllers keep the state valid and are deterministic on random scenarios") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const Scenario s = random_scenario(rng, false);
        for (ControllerKind kind :
             {ControllerKind::Bfd, ControllerKind::Bcf, ControllerKind::Bcffs}) {
            const ControllerResult r1 = run_controller(kind, s.ctx());
            const ControllerResult r2 = run_controller(kind, s.ctx());
            REQUIRE(r1.actions.size() == r2.actions.size());
            for (size_t i = 0; i < r1.actions.size(); ++i) {
                CHECK(r1.actions[i].kind == r2.actions[i].kind);
                CHECK(r1.actions[i].subject == r2.actions[i].subject);
                CHECK(r1.actions[i].target_pm == r2.actions[i].target_pm);
                CHECK(r1.actions[i].target_freq_ghz == r2.actions[i].target_freq_ghz);
            }
            CHECK(r1.unplaced == r2.unplaced);

            CloudState state = s.state;
            apply_actions(state, r1.actions, s.inv, s.params.ladder);
            CHECK(validate_state(state, s.inv, s.params.ladder).empty());

            // A valid state keeps every host's utilisation inside [0,1].
            for (const auto& [pm_id, vms] : state.hosted_by_pm(s.inv)) {
                const double util = utilisation(s.inv.pms.at(pm_id), vms, s.params.weights);
                CHECK(util >= 0.0);
                CHECK(util <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("bcf and bcffs produce identical allocations on random scenarios") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const Scenario s = random_scenario(rng, false);
        const ControllerResult bcf = bcf_controller(s.ctx());
        const ControllerResult bcffs = bcffs_controller(s.ctx());

        CloudState state_bcf = s.state;
        apply_actions(state_bcf, bcf.actions, s.inv, s.params.ladder);
        CloudState state_bcffs = s.state;
        apply_actions(state_bcffs, bcffs.actions, s.inv, s.params.ladder);

        CHECK(state_bcf.allocation == state_bcffs.allocation);
        CHECK(state_bcf.suspended == state_bcffs.suspended);
        CHECK(bcf.unplaced == bcffs.unplaced);
    }
}
