#include <doctest.h>

#include <cmath>
#include <vector>

#include "srs/allocation.hpp"
#include "srs/errors.hpp"
#include "srs/random.hpp"
#include "support/oracles.hpp"

using srs::Allocation;
using srs::AllocationInput;
using srs::StratumId;

namespace {

// The ten-stratum instance: one bounded high-spread stratum, nine abundant
// low-spread ones.
AllocationInput ten_strata(std::uint64_t budget) {
  AllocationInput input;
  input.budget = budget;
  input.strata.push_back({StratumId::of(1), 100, 100.0});
  for (int i = 2; i <= 10; ++i) {
    input.strata.push_back({StratumId::of(i), 1000, 0.1});
  }
  return input;
}

AllocationInput make_input(
    const std::vector<std::pair<std::uint64_t, double>>& rows,
    std::uint64_t budget) {
  AllocationInput input;
  input.budget = budget;
  std::uint64_t next = 1;
  for (const auto& [n, sigma] : rows) {
    input.strata.push_back({StratumId::of(next++), n, sigma});
  }
  return input;
}

}  // namespace

TEST_CASE("neyman splits proportionally to n*sigma") {
  const Allocation a = neyman(ten_strata(1000));
  CHECK(a.at(StratumId::of(1)) ==
        doctest::Approx(1000.0 * 10000.0 / 10900.0));
  for (int i = 2; i <= 10; ++i) {
    CHECK(a.at(StratumId::of(i)) == doctest::Approx(1000.0 * 100.0 / 10900.0));
  }

  const Allocation even =
      neyman(make_input({{10, 6.0}, {20, 3.0}, {30, 2.0}}, 12));
  for (int i = 1; i <= 3; ++i) {
    CHECK(even.at(StratumId::of(i)) == doctest::Approx(4.0));
  }

  const Allocation single = neyman(make_input({{80, 2.5}}, 50));
  CHECK(single.at(StratumId::of(1)) == doctest::Approx(50.0));

  CHECK_THROWS_AS(neyman(make_input({{5, 0.0}, {9, 0.0}}, 4)),
                  srs::AllZeroWeights);
}

TEST_CASE("neyman is scale invariant in sigma") {
  srs::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    AllocationInput input;
    input.budget = 500;
    const int r = 2 + static_cast<int>(rng.next() % 10);
    for (int i = 1; i <= r; ++i) {
      input.strata.push_back({StratumId::of(i), 1 + rng.next() % 1000,
                              0.01 + 10.0 * rng.open_unit()});
    }
    const Allocation base = neyman(input);
    AllocationInput doubled = input;
    for (auto& s : doubled.strata) s.sigma *= 1024.0;  // power of two: exact
    const Allocation scaled = neyman(doubled);
    for (const auto& [id, v] : base.entries) {
      CHECK(scaled.at(id) == v);
    }
    AllocationInput tripled = input;
    for (auto& s : tripled.strata) s.sigma *= 3.0;
    const Allocation scaled3 = neyman(tripled);
    for (const auto& [id, v] : base.entries) {
      CHECK(scaled3.at(id) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("neyman_plus redistributes the unused budget equally") {
  const Allocation a = neyman_plus(ten_strata(1000));
  CHECK(a.at(StratumId::of(1)) == doctest::Approx(100.0));
  for (int i = 2; i <= 10; ++i) {
    CHECK(a.at(StratumId::of(i)) == doctest::Approx(100.0));
  }
  CHECK(a.total() == doctest::Approx(1000.0));

  // No stratum bounded: identical to plain Neyman.
  const AllocationInput roomy = make_input({{500, 1.0}, {500, 3.0}}, 100);
  const Allocation plus = neyman_plus(roomy);
  const Allocation plain = neyman(roomy);
  for (const auto& [id, v] : plain.entries) {
    CHECK(plus.at(id) == doctest::Approx(v));
  }

  // Everything bounded: entries are the populations themselves.
  const Allocation capped = neyman_plus(make_input({{3, 5.0}, {4, 2.0}}, 100));
  CHECK(capped.at(StratumId::of(1)) == doctest::Approx(3.0));
  CHECK(capped.at(StratumId::of(2)) == doctest::Approx(4.0));
}

TEST_CASE("proportional follows the population counts") {
  const Allocation a = proportional(make_input({{10, 1.0}, {30, 1.0}}, 4));
  CHECK(a.at(StratumId::of(1)) == doctest::Approx(1.0));
  CHECK(a.at(StratumId::of(2)) == doctest::Approx(3.0));

  const Allocation even =
      proportional(make_input({{7, 0.0}, {7, 9.0}, {7, 1.0}}, 9));
  for (int i = 1; i <= 3; ++i) {
    CHECK(even.at(StratumId::of(i)) == doctest::Approx(3.0));
  }

  const Allocation lopsided = proportional(make_input({{1, 1.0}, {0, 1.0}}, 5));
  CHECK(lopsided.at(StratumId::of(1)) == doctest::Approx(5.0));
  CHECK(lopsided.at(StratumId::of(2)) == doctest::Approx(0.0));

  CHECK_THROWS_AS(proportional(make_input({{0, 1.0}, {0, 2.0}}, 5)),
                  srs::EmptyPopulation);
}

TEST_CASE("uniform redistribution caps at the population and re-splits") {
  const Allocation a =
      uniform_redistribute(make_input({{3, 1.0}, {100, 1.0}}, 10));
  CHECK(a.at(StratumId::of(1)) == doctest::Approx(3.0));
  CHECK(a.at(StratumId::of(2)) == doctest::Approx(7.0));

  const Allocation even = uniform_redistribute(
      make_input({{2, 1.0}, {5, 1.0}, {9, 1.0}, {2, 1.0}}, 8));
  for (int i = 1; i <= 4; ++i) {
    CHECK(even.at(StratumId::of(i)) == doctest::Approx(2.0));
  }

  const Allocation tiny = uniform_redistribute(make_input({{1, 1.0}, {1, 1.0}}, 10));
  CHECK(tiny.at(StratumId::of(1)) == doctest::Approx(1.0));
  CHECK(tiny.at(StratumId::of(2)) == doctest::Approx(1.0));
}

TEST_CASE("capping rules never exceed the population") {
  srs::Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    AllocationInput input;
    input.budget = 1 + rng.next() % 2000;
    const int r = 1 + static_cast<int>(rng.next() % 12);
    for (int i = 1; i <= r; ++i) {
      input.strata.push_back({StratumId::of(i), rng.next() % 300,
                              5.0 * rng.open_unit()});
    }
    double weight = 0.0;
    for (const auto& s : input.strata) weight += s.weight();
    const std::uint64_t population = input.total_count();
    const double expected_total =
        std::min(static_cast<double>(input.budget),
                 static_cast<double>(population));

    const Allocation u = uniform_redistribute(input);
    CHECK(u.total() == doctest::Approx(expected_total));
    for (const auto& s : input.strata) {
      CHECK(u.at(s.id) <= static_cast<double>(s.count) + 1e-9);
    }
    if (weight > 0.0) {
      const Allocation np = neyman_plus(input);
      CHECK(np.total() == doctest::Approx(expected_total));
      for (const auto& s : input.strata) {
        CHECK(np.at(s.id) <= static_cast<double>(s.count) + 1e-9);
      }
    }
  }
}

TEST_CASE("integerize uses largest remainders and exact totals") {
  // Already integral: unchanged.
  Allocation flat;
  flat.budget = 6;
  flat.entries[StratumId::of(1)] = 2.0;
  flat.entries[StratumId::of(2)] = 4.0;
  const Allocation same = integerize(flat);
  CHECK(same.at(StratumId::of(1)) == 2.0);
  CHECK(same.at(StratumId::of(2)) == 4.0);

  // Forced rounding with a tie: the smaller id wins.
  Allocation half;
  half.budget = 1;
  half.entries[StratumId::of(1)] = 0.5;
  half.entries[StratumId::of(2)] = 0.5;
  const Allocation one = integerize(half);
  CHECK(one.at(StratumId::of(1)) == 1.0);
  CHECK(one.at(StratumId::of(2)) == 0.0);

  // The ten-stratum Neyman vector, rounded to the full budget: stratum 1 has
  // the largest fraction (.43), then the nine .17 ties in id order ("10"
  // sorts before "2").
  const Allocation splits = integerize(neyman(ten_strata(1000)));
  CHECK(splits.at(StratumId::of(1)) == 918.0);
  CHECK(splits.at(StratumId::of(10)) == 10.0);
  for (int i = 2; i <= 9; ++i) {
    CHECK(splits.at(StratumId::of(i)) == 9.0);
  }
  CHECK(splits.total() == doctest::Approx(1000.0));
}

TEST_CASE("integerize respects caps and reports infeasible budgets") {
  Allocation a;
  a.budget = 10;
  a.entries[StratumId::of(1)] = 4.5;
  a.entries[StratumId::of(2)] = 5.5;
  std::map<StratumId, double> caps{{StratumId::of(1), 5.0},
                                   {StratumId::of(2), 6.0}};
  const Allocation rounded = integerize(a, caps);
  CHECK(rounded.total() == doctest::Approx(10.0));
  CHECK(rounded.at(StratumId::of(1)) <= 5.0);
  CHECK(rounded.at(StratumId::of(2)) <= 6.0);

  std::map<StratumId, double> tight{{StratumId::of(1), 2.0},
                                    {StratumId::of(2), 3.0}};
  const Allocation clipped = integerize(a, tight);
  CHECK(clipped.total() == doctest::Approx(5.0));  // min(budget, caps)

  CHECK_THROWS_AS(srs::integerize_to_total(a, tight, 10.0),
                  srs::InfeasibleBudget);
}

TEST_CASE("gain-ordered rounding never starves a needed stratum") {
  // Largest remainders would hand both units of (1.5, 0.5) to stratum 1 on
  // the fraction tie; the marginal-gain order keeps stratum 2 alive.
  Allocation cont;
  cont.budget = 2;
  cont.entries[StratumId::of(1)] = 1.5;
  cont.entries[StratumId::of(2)] = 0.5;
  std::map<StratumId, double> weights{{StratumId::of(1), 3.0},
                                      {StratumId::of(2), 1.0}};
  std::map<StratumId, double> caps{{StratumId::of(1), 2.0},
                                   {StratumId::of(2), 1.0}};
  const Allocation out = integerize_by_gain(cont, weights, caps, 2.0);
  CHECK(out.at(StratumId::of(1)) == 1.0);
  CHECK(out.at(StratumId::of(2)) == 1.0);

  // On the ten-stratum Neyman vector the big stratum's marginal gain beats
  // the nine small ones twice over, so both spare units go to it.
  const Allocation ney = neyman(ten_strata(1000));
  std::map<StratumId, double> w10, c10;
  w10[StratumId::of(1)] = 100.0 * 100.0;
  c10[StratumId::of(1)] = 1e9;
  for (int i = 2; i <= 10; ++i) {
    w10[StratumId::of(i)] = 1000.0 * 0.1;
    c10[StratumId::of(i)] = 1e9;
  }
  const Allocation big = integerize_by_gain(ney, w10, c10, 1000.0);
  CHECK(big.at(StratumId::of(1)) == 919.0);
  for (int i = 2; i <= 10; ++i) {
    CHECK(big.at(StratumId::of(i)) == 9.0);
  }
  CHECK(big.total() == doctest::Approx(1000.0));

  CHECK_THROWS_AS(
      integerize_by_gain(cont, weights,
                         {{StratumId::of(1), 1.0}, {StratumId::of(2), 0.0}},
                         2.0),
      srs::InfeasibleBudget);
}

TEST_CASE("integerize preserves entry order up to one unit") {
  srs::Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int r = 2 + static_cast<int>(rng.next() % 10);
    Allocation a;
    std::vector<double> shares(r);
    double total = 0.0;
    for (auto& s : shares) {
      s = rng.open_unit();
      total += s;
    }
    const double budget = 10.0 + static_cast<double>(rng.next() % 100);
    a.budget = budget;
    for (int i = 0; i < r; ++i) {
      a.entries[StratumId::of(i + 1)] = budget * shares[i] / total;
    }
    const Allocation out = integerize(a);
    CHECK(out.total() == doctest::Approx(budget));
    for (const auto& [ida, va] : a.entries) {
      for (const auto& [idb, vb] : a.entries) {
        if (va >= vb) {
          CHECK(out.at(ida) >= out.at(idb) - 1.0);
        }
      }
    }
  }
}

TEST_CASE("cosine distance") {
  Allocation a, b;
  a.entries[StratumId::of(1)] = 3.0;
  a.entries[StratumId::of(2)] = 4.0;
  b = a;
  CHECK(cosine_distance(a, b) == doctest::Approx(0.0));

  Allocation x, y;
  x.entries[StratumId::of(1)] = 1.0;
  x.entries[StratumId::of(2)] = 0.0;
  y.entries[StratumId::of(1)] = 0.0;
  y.entries[StratumId::of(2)] = 1.0;
  CHECK(cosine_distance(x, y) == doctest::Approx(1.0));

  Allocation p, q;
  p.entries[StratumId::of(1)] = 1.0;
  p.entries[StratumId::of(2)] = 1.0;
  q.entries[StratumId::of(1)] = 1.0;
  q.entries[StratumId::of(2)] = 0.0;
  CHECK(cosine_distance(p, q) ==
        doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));

  Allocation zero;
  zero.entries[StratumId::of(1)] = 0.0;
  CHECK_THROWS_AS(cosine_distance(zero, p), srs::ZeroVector);
}
