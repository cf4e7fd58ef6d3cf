#pragma once

namespace lighttune {

/// Multiply-accumulate counter. Counts weight arithmetic in the unit used by
/// the complexity budgets: one MAC per weight multiply in a forward pass or
/// outer product, one per parameter for gradient combination and update
/// application. Optimizer scalar bookkeeping is not counted.
struct MacCounter {
    long long macs = 0;
    void add(long long n) { macs += n; }
    void reset() { macs = 0; }
};

inline void mac_add(MacCounter* c, long long n) {
    if (c != nullptr) c->add(n);
}

}  // namespace lighttune
