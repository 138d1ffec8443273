// Runs the ten acceptance criteria and prints one PASS/FAIL line each.
// Usage: acceptance [criterion...]   (default: all)

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "riesz/batteries.hpp"

using namespace riesz;

namespace {

McConfig mc_config() {
  McConfig c;
  c.threads = threads_from_env(1);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::function<BatteryResult()>> criteria = {
      [] {
        auto r = battery_kernel_identities();
        r.pass = r.pass && r.seconds < 5;
        return r;
      },
      [] { return battery_momx(); },
      [] {
        auto r = battery_green_bound();
        r.pass = r.pass && r.seconds < 60;
        return r;
      },
      [] {
        auto r = battery_nuw();
        r.pass = r.pass && r.seconds < 10;
        return r;
      },
      [] { return battery_mc_tree(mc_config()); },
      [] {
        McConfig c = mc_config();
        c.paths = 25'000;
        auto r = battery_wos_green(c);
        r.pass = r.pass && r.seconds < 300;
        return r;
      },
      [] { return battery_upsilon(); },
      [] { return battery_divergence(); },
      [] { return battery_weighted(mc_config()); },
      [] { return battery_disk(); },
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    BatteryResult r;
    try {
      r = criteria[i]();
    } catch (const std::exception& e) {
      r.name = "criterion " + std::to_string(id);
      r.pass = false;
      r.summary = std::string("error: ") + e.what();
    }
    for (const auto& row : r.rows)
      if (!row.pass) std::printf("    failed: %s %s value=%.17g reference=%.17g\n", row.op.c_str(), row.params.c_str(),
                                 row.value, row.reference);
    std::printf("%s %2d %s: %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", id, r.name.c_str(), r.summary.c_str(), r.seconds);
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
