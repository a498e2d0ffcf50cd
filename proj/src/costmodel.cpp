#include "ktnz/costmodel.hpp"

#include <set>
#include <string>

#include "ktnz/errors.hpp"

namespace ktnz {

std::uint64_t contraction_cost(const ContractionSpec& spec,
                               const std::map<char, std::size_t>& sizes) {
    std::set<char> symbols;
    for (const auto& in : spec.inputs) {
        for (char c : in) symbols.insert(c);
    }
    for (char c : spec.output) {
        if (!symbols.count(c)) {
            fail(ErrorCode::SpecMismatch,
                 std::string("output symbol '") + c + "' missing from inputs");
        }
    }
    std::uint64_t cost = 1;
    for (char c : symbols) {
        const auto it = sizes.find(c);
        if (it == sizes.end()) {
            fail(ErrorCode::SpecMismatch,
                 std::string("no size given for symbol '") + c + "'");
        }
        cost *= it->second;
    }
    return cost;
}

double tucker_memory_cr(const ConvShape& s) {
    const double dense = static_cast<double>(s.kernel_h) * s.kernel_w * s.c_in * s.c_out;
    const double factored = static_cast<double>(s.kernel_h) * s.ranks[0] +
                            static_cast<double>(s.kernel_w) * s.ranks[1] +
                            static_cast<double>(s.c_in) * s.ranks[2] +
                            static_cast<double>(s.c_out) * s.ranks[3];
    return dense / factored;
}

CostEstimate tucker_conv_costs(const ConvShape& s) {
    const std::uint64_t hw = static_cast<std::uint64_t>(s.h_out) * s.w_out;
    const std::uint64_t x = s.kernel_h, y = s.kernel_w;
    const std::uint64_t ra = s.ranks[0], rb = s.ranks[1], rg = s.ranks[2],
                        rd = s.ranks[3];

    CostEstimate e;
    e.order_assumption_violated = !(s.c_in > s.kernel_h);
    e.dense_cost = hw * x * y * s.c_in * s.c_out;
    e.cost1 = hw * (x * y * s.c_in * rg + x * y * rg * ra + ra * y * rg * rb);
    e.cost2 = hw * ra * rb * rg * rd;
    e.cost3 = hw * rd * s.c_out;
    e.tucker_cost = e.cost1 + e.cost2 + e.cost3;
    e.speedup = static_cast<double>(e.dense_cost) / static_cast<double>(e.tucker_cost);
    e.memory_cr = tucker_memory_cr(s);
    return e;
}

} // namespace ktnz
