#include <algorithm>

#include "convhawkes/estimation.hpp"
#include "convhawkes/gamma_fit.hpp"

namespace convhawkes {

std::vector<IndexedGap> indexed_gaps(const Dataset& d) {
  std::vector<IndexedGap> out;
  for (const auto& c : d.conversations) {
    for (std::size_t i = 1; i < c.messages.size(); ++i) {
      out.push_back({i, c.messages[i].time - c.messages[i - 1].time});
    }
  }
  return out;
}

namespace {

std::vector<double> lengths(const std::vector<IndexedGap>& gaps) {
  std::vector<double> out;
  out.reserve(gaps.size());
  for (const auto& g : gaps) out.push_back(g.length);
  return out;
}

}  // namespace

BaselineParams fit_se(const Dataset& d) {
  const auto gaps = lengths(indexed_gaps(d));
  if (gaps.empty()) throw DataError("SE fit needs at least one gap");
  double sum = 0.0;
  for (double g : gaps) sum += g;
  if (!(sum > 0.0)) throw DataError("SE fit needs a positive mean gap");
  return SumOfExponentials{static_cast<double>(gaps.size()) / sum};
}

BaselineParams fit_sgs(const Dataset& d) { return SumOfGammaStatic{fit_gamma(lengths(indexed_gaps(d)))}; }

BaselineParams fit_sgd(const Dataset& d, std::size_t pool_from) {
  if (pool_from < 2) throw UsageError("SGD pooling index must be at least 2");
  const auto gaps = indexed_gaps(d);
  std::vector<std::vector<double>> buckets(pool_from - 1);
  std::vector<double> pooled;
  for (const auto& g : gaps) {
    if (g.index < pool_from) {
      buckets[g.index - 1].push_back(g.length);
    } else {
      pooled.push_back(g.length);
    }
  }
  std::vector<bool> fits(buckets.size());
  for (std::size_t j = 0; j < buckets.size(); ++j) {
    fits[j] = gamma_fit_possible(buckets[j]);
    if (!fits[j]) pooled.insert(pooled.end(), buckets[j].begin(), buckets[j].end());
  }

  SumOfGammaDynamic out;
  out.tail = gamma_fit_possible(pooled) ? fit_gamma(pooled) : fit_gamma(lengths(gaps));

  std::size_t last = 0;
  for (std::size_t j = 0; j < fits.size(); ++j) {
    if (fits[j]) last = j + 1;
  }
  for (std::size_t j = 0; j < last; ++j) {
    out.per_index.push_back(fits[j] ? fit_gamma(buckets[j]) : out.tail);
  }
  if (out.per_index.empty()) out.per_index.push_back(out.tail);
  return out;
}

}  // namespace convhawkes
