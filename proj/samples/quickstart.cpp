// Runs the full model with seeded weights on a random pair and
// prints the disparity range and per-stage MACs.

#include <algorithm>
#include <cstdio>

#include "banet/banet.hpp"

int main() {
    const banet::ModelConfig cfg = banet::full_config();
    const banet::WeightStore weights = banet::init_random(cfg, 7);

    auto [left, right] = banet::random_views(128, 160, 3);
    const banet::ForwardOutput out = banet::forward(left, right, weights, cfg);

    const auto values = out.d1.data();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::printf("disparity %dx%d in [%.3f, %.3f]\n", out.d1.w(), out.d1.h(), *lo, *hi);

    for (const auto& s : banet::count_macs(cfg, 128, 160).stages) {
        std::printf("%-22s %8.3f GMAC\n", s.name.c_str(), static_cast<double>(s.macs) * 1e-9);
    }
    return 0;
}
