#include "srs/types.hpp"

namespace srs {

StratumStats merge(const StratumStats& a, const StratumStats& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  StratumStats out;
  out.count = a.count + b.count;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const double delta = b.mean - a.mean;
  out.mean = a.mean + delta * nb / n;
  out.m2 = a.m2 + b.m2 + delta * delta * na * nb / n;
  if (out.m2 < 0.0) out.m2 = 0.0;
  return out;
}

}  // namespace srs
