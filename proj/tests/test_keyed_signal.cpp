#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "agenttrace/keys.hpp"
#include "agenttrace/prf.hpp"

using namespace agenttrace;

namespace {

AgentKey test_key(std::uint64_t wm_id = 42, int n_gram = 2) {
  return AgentKey{"a1", wm_id, 1, 2.0, n_gram};
}

}  // namespace

TEST_CASE("perturbation vector matches the analytic sine row", "[keyed_signal]") {
  const auto phi = derive_perturbation_vector(test_key(), 4);
  REQUIRE(phi.size() == 4);
  CHECK(phi[0] == Catch::Approx(0.70710678).margin(1e-8));
  CHECK(phi[1] == Catch::Approx(0.70710678).margin(1e-8));
  CHECK(phi[2] == Catch::Approx(-0.70710678).margin(1e-8));
  CHECK(phi[3] == Catch::Approx(-0.70710678).margin(1e-8));
}

TEST_CASE("perturbation vector sums to zero across vocab sizes", "[keyed_signal]") {
  for (std::uint32_t v : {2u, 3u, 5u, 16u, 257u, 1024u, 4096u}) {
    for (int order : {1, 2, 3}) {
      AgentKey key = test_key();
      key.k_p_order = order;
      const auto phi = derive_perturbation_vector(key, v);
      const double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
      INFO("V=" << v << " order=" << order);
      CHECK(std::abs(sum) <= 1e-9);
      for (double x : phi) CHECK(std::abs(x) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("perturbation vector is deterministic and validates input", "[keyed_signal]") {
  const auto a = derive_perturbation_vector(test_key(), 256);
  const auto b = derive_perturbation_vector(test_key(), 256);
  CHECK(a == b);
  CHECK_THROWS_AS(derive_perturbation_vector(test_key(), 1), std::invalid_argument);
  AgentKey bad = test_key();
  bad.kappa = -1.0;
  CHECK_THROWS_AS(derive_perturbation_vector(bad, 4), std::invalid_argument);
  bad = test_key();
  bad.k_p_order = 0;
  CHECK_THROWS_AS(derive_perturbation_vector(bad, 4), std::invalid_argument);
  bad = test_key();
  bad.n_gram = 0;
  CHECK_THROWS_AS(derive_perturbation_vector(bad, 4), std::invalid_argument);
}

TEST_CASE("derived permutations are deterministic bijections", "[keyed_signal]") {
  const std::vector<std::uint32_t> ctx{7};
  const auto p1 = derive_permutation(test_key(), ctx, 64);
  const auto p2 = derive_permutation(test_key(), ctx, 64);
  CHECK(p1.forward == p2.forward);
  CHECK(p1.context_fingerprint == p2.context_fingerprint);

  for (std::uint32_t v = 1; v <= 1024; ++v) {
    const auto p = derive_permutation(test_key(), ctx, v);
    auto sorted = p.forward;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::uint32_t> identity(v);
    std::iota(identity.begin(), identity.end(), 0u);
    if (sorted != identity) {
      FAIL("forward is not a bijection at V=" << v);
    }
  }
}

TEST_CASE("permutation requires the exact context length", "[keyed_signal]") {
  CHECK_THROWS_AS(derive_permutation(test_key(42, 2), std::vector<std::uint32_t>{}, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(derive_permutation(test_key(42, 2), std::vector<std::uint32_t>{1, 2}, 8),
                  std::invalid_argument);
  CHECK_NOTHROW(derive_permutation(test_key(42, 3), std::vector<std::uint32_t>{1, 2}, 8));
}

TEST_CASE("distinct watermark ids agree only at chance level", "[keyed_signal]") {
  const std::uint32_t v = 64;
  std::size_t agreements = 0;
  const std::size_t contexts = 1000;
  for (std::size_t c = 0; c < contexts; ++c) {
    const std::vector<std::uint32_t> ctx{static_cast<std::uint32_t>(c % 4096)};
    const auto pa = derive_permutation(test_key(42), ctx, v);
    const auto pb = derive_permutation(test_key(43), ctx, v);
    for (std::uint32_t i = 0; i < v; ++i) {
      if (pa.forward[i] == pb.forward[i]) ++agreements;
    }
  }
  const double fraction = static_cast<double>(agreements) / (contexts * v);
  // Chance agreement of independent permutations is 1/V = 0.015625; the
  // Monte-Carlo band is +-4 sd of the mean over 1000 contexts.
  CHECK(fraction > 0.0115);
  CHECK(fraction < 0.0205);
}

TEST_CASE("permute_index round-trips and checks bounds", "[keyed_signal]") {
  Permutation identity;
  identity.forward.resize(16);
  identity.inverse.resize(16);
  std::iota(identity.forward.begin(), identity.forward.end(), 0u);
  std::iota(identity.inverse.begin(), identity.inverse.end(), 0u);
  CHECK(permute_index(identity, 7) == 7);

  const auto p = derive_permutation(test_key(), std::vector<std::uint32_t>{3}, 16);
  for (std::uint32_t t = 0; t < 16; ++t) {
    CHECK(inverse_permute(p, permute_index(p, t)) == t);
  }
  CHECK_THROWS_AS(permute_index(p, 16), std::invalid_argument);
  CHECK_THROWS_AS(inverse_permute(p, 16), std::invalid_argument);
}

TEST_CASE("golden permutation for seed 42, context (0), V=8", "[keyed_signal]") {
  const auto p = derive_permutation(test_key(42, 2), std::vector<std::uint32_t>{0}, 8);
  // Frozen regression fixture: any change to the keyed shuffle or the
  // context digest shows up here first.
  std::vector<std::uint32_t> golden{2, 5, 1, 3, 4, 7, 0, 6};
  CHECK(p.forward == golden);
}

TEST_CASE("wrong-key scores are centered on zero", "[keyed_signal]") {
  const std::uint32_t v = 256;
  const auto phi = derive_perturbation_vector(test_key(999), v);
  SplitMix64 rng(2024);
  double sum = 0.0;
  const std::size_t n = 200000;
  PermutationCache cache;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::uint32_t> ctx{static_cast<std::uint32_t>(rng.next_below(v))};
    const auto& p = cache.get(test_key(999), ctx, v);
    const auto token = static_cast<std::uint32_t>(rng.next_below(v));
    sum += phi[p.forward[token]];
  }
  const double mean = sum / static_cast<double>(n);
  const double band = 4.0 * 0.7071 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean) <= band);
}

TEST_CASE("permutation cache returns identical permutations", "[keyed_signal]") {
  PermutationCache cache(4);
  const std::vector<std::uint32_t> ctx{5};
  const auto& a = cache.get(test_key(), ctx, 32);
  const auto forward = a.forward;
  const auto& b = cache.get(test_key(), ctx, 32);
  CHECK(b.forward == forward);
  CHECK(cache.size() == 1);
  // Distinct vocab sizes are distinct entries.
  cache.get(test_key(), ctx, 16);
  CHECK(cache.size() == 2);
  // Eviction keeps the cache bounded.
  for (std::uint32_t t = 0; t < 10; ++t) {
    cache.get(test_key(), std::vector<std::uint32_t>{t + 100}, 32);
  }
  CHECK(cache.size() == 4);
  const auto& c = cache.get(test_key(), ctx, 32);
  CHECK(c.forward == forward);
}

TEST_CASE("pad_context left-pads with the begin token", "[keyed_signal]") {
  const std::vector<std::uint32_t> history{10, 11, 12};
  CHECK(pad_context(history, 2) == std::vector<std::uint32_t>{12});
  CHECK(pad_context(history, 5) ==
        std::vector<std::uint32_t>{kBeginToken, 10, 11, 12});
  CHECK(pad_context(std::vector<std::uint32_t>{}, 3) ==
        std::vector<std::uint32_t>{kBeginToken, kBeginToken});
  CHECK(pad_context(history, 1).empty());
}

TEST_CASE("make_keys assigns consecutive watermark ids", "[keyed_signal]") {
  const auto ids = default_agent_ids(3);
  const auto keys = make_keys(ids);
  REQUIRE(keys.size() == 3);
  CHECK(keys[0].agent_id == "a1");
  CHECK(keys[0].watermark_id == 42);
  CHECK(keys[1].watermark_id == 43);
  CHECK(keys[2].watermark_id == 44);
  CHECK(keys[2].kappa == 2.0);
  CHECK(keys[2].n_gram == 2);
}
