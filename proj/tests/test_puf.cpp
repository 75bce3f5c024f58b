#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "datasafe/puf.hpp"

using namespace datasafe;

namespace {

// Exact binomial tail P(Bin(n, p) >= k), the independent oracle for decoder
// failure rates.
long double binomial_tail(int n, long double p, int k) {
    long double total = 0.0L;
    for (int i = k; i <= n; ++i) {
        long double log_c = std::lgamma(n + 1.0L) - std::lgamma(i + 1.0L) -
                            std::lgamma(n - i + 1.0L);
        total += std::exp(log_c + i * std::log(p) + (n - i) * std::log(1.0L - p));
    }
    return total;
}

}  // namespace

TEST_CASE("power_on_read: zero noise identity, determinism, noise magnitude") {
    PufParams quiet;
    quiet.flip_prob = 0.0;
    SramPufModel silent = SramPufModel::from_seed("dev0", 1, quiet);
    CHECK(silent.power_on_read(123) == silent.ground_truth());

    SramPufModel noisy = SramPufModel::from_seed("dev1", 2);
    CHECK(noisy.power_on_read(55) == noisy.power_on_read(55));
    CHECK(noisy.power_on_read(55) != noisy.power_on_read(56));

    // Binomial oracle: flips within mean +/- 5 sigma.
    double mean = 4096 * 0.10;
    double sigma = std::sqrt(4096 * 0.10 * 0.90);
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto d = static_cast<double>(
            hamming_distance(noisy.power_on_read(seed), noisy.ground_truth()));
        CHECK(d > mean - 5 * sigma);
        CHECK(d < mean + 5 * sigma);
    }
}

TEST_CASE("distinct identity seeds give independent ground truths") {
    std::vector<SramPufModel> devices;
    for (uint64_t i = 0; i < 10; ++i)
        devices.push_back(SramPufModel::from_seed("d" + std::to_string(i), 1000 + i));
    for (size_t i = 0; i < devices.size(); ++i) {
        for (size_t j = i + 1; j < devices.size(); ++j) {
            double frac = static_cast<double>(hamming_distance(devices[i].ground_truth(),
                                                               devices[j].ground_truth())) /
                          4096.0;
            CHECK(frac > 0.45);
            CHECK(frac < 0.55);
        }
    }
}

TEST_CASE("fuzzy extractor round trips at zero noise") {
    SramPufModel model = SramPufModel::from_seed("fe0", 10);
    auto [secret, helper] = fe_gen(model.ground_truth());
    CHECK(fe_rep(model.ground_truth(), helper) == secret);
}

TEST_CASE("fe_gen rejects wrong reading length") {
    BitVec short_reading(100, 0);
    CHECK_THROWS_AS(fe_gen(short_reading), Error);
}

TEST_CASE("helper data corruption is detected, never a silent wrong key") {
    SramPufModel model = SramPufModel::from_seed("fe1", 11);
    auto [secret, helper] = fe_gen(model.ground_truth());

    std::mt19937_64 rng(77);
    for (int i = 0; i < 100; ++i) {
        HelperData corrupted = helper;
        corrupted.syndrome[rng() % corrupted.syndrome.size()] ^= 1;
        CHECK_THROWS_AS(fe_rep(model.ground_truth(), corrupted), Error);
    }
}

TEST_CASE("reproduction failure rate tracks the binomial oracle") {
    PufParams params;
    long double p_bit = binomial_tail(static_cast<int>(params.repetition), 0.10L,
                                      static_cast<int>(params.repetition / 2 + 1));
    long double p_key = 1.0L - std::pow(1.0L - p_bit, 256.0L);
    // Sanity on the oracle itself: around 2.6e-5 per bit, ~6.7e-3 per key.
    CHECK(p_bit > 1e-5);
    CHECK(p_bit < 1e-4);
    CHECK(p_key > 1e-3);
    CHECK(p_key < 2e-2);

    SramPufModel model = SramPufModel::from_seed("fe2", 12);
    auto [secret, helper] = fe_gen(model.ground_truth());

    const int trials = 2000;
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        try {
            DeviceSecret s = fe_rep(model.power_on_read(static_cast<uint64_t>(t)), helper);
            CHECK(s == secret);  // success must reproduce the enrolled secret exactly
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ReproductionFailed);
            ++failures;
        }
    }
    double expected = static_cast<double>(p_key) * trials;
    double sigma = std::sqrt(static_cast<double>(p_key) * (1.0 - static_cast<double>(p_key)) *
                             trials);
    CHECK(failures >= expected - 4 * sigma - 1);
    CHECK(failures <= expected + 4 * sigma + 1);
}

TEST_CASE("reading from a different device defeats reproduction") {
    SramPufModel alice = SramPufModel::from_seed("alice", 20);
    SramPufModel mallory = SramPufModel::from_seed("mallory", 21);
    auto [secret, helper] = fe_gen(alice.ground_truth());
    CHECK_THROWS_AS(fe_rep(mallory.power_on_read(0), helper), Error);
}

TEST_CASE("gen is a deterministic collision-free PRF") {
    SramPufModel model = SramPufModel::from_seed("prf", 30);
    auto [secret, helper] = fe_gen(model.ground_truth());
    SramPufModel other_model = SramPufModel::from_seed("prf2", 31);
    auto [other_secret, other_helper] = fe_gen(other_model.ground_truth());

    Hash32 c{};
    c[0] = 1;
    CHECK(puf_gen(secret, c) == puf_gen(secret, c));

    std::mt19937_64 rng(99);
    std::set<Hash32> outputs;
    for (int i = 0; i < 10000; ++i) {
        Hash32 input{};
        for (auto& b : input) b = static_cast<uint8_t>(rng());
        Hash32 out = puf_gen(secret, input);
        CHECK(outputs.insert(out).second);            // no same-key collisions
        CHECK(out != puf_gen(other_secret, input));   // no cross-key collisions
    }
}

TEST_CASE("respond: consistency across power-ups, clone mismatch, avalanche") {
    SramPufModel model = SramPufModel::from_seed("resp", 40);
    auto [secret, helper] = fe_gen(model.ground_truth());
    Hash32 c = sha256(std::string("challenge"));
    Hash32 enrolled_r = puf_respond(secret, c);

    int successes = 0;
    for (uint64_t t = 0; t < 50; ++t) {
        try {
            DeviceSecret s = fe_rep(model.power_on_read(t), helper);
            CHECK(puf_respond(s, c) == enrolled_r);
            ++successes;
        } catch (const Error&) {
        }
    }
    CHECK(successes > 40);

    // A clone with independent ground truth cannot answer.
    SramPufModel clone = SramPufModel::from_seed("resp-clone", 41);
    auto [clone_secret, clone_helper] = fe_gen(clone.ground_truth());
    CHECK(puf_respond(clone_secret, c) != enrolled_r);

    std::mt19937_64 rng(123);
    for (int i = 0; i < 100; ++i) {
        Hash32 c2 = c;
        size_t bit = rng() % 256;
        c2[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
        CHECK(puf_respond(secret, c2) != enrolled_r);
    }
}

TEST_CASE("wrap/unwrap private key") {
    SramPufModel model = SramPufModel::from_seed("wrap", 50);
    auto [secret, helper] = fe_gen(model.ground_truth());
    Scalar sk{};
    for (int i = 0; i < 32; ++i) sk[static_cast<size_t>(i)] = static_cast<uint8_t>(i + 1);

    WrappedKey wk = wrap_sk(secret, sk, 7);
    CHECK(unwrap_sk(secret, wk) == sk);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        WrappedKey tampered = wk;
        tampered.ciphertext[rng() % tampered.ciphertext.size()] ^=
            static_cast<uint8_t>(1 + rng() % 255);
        CHECK_THROWS_AS(unwrap_sk(secret, tampered), Error);
    }

    SramPufModel other = SramPufModel::from_seed("wrap-other", 51);
    auto [other_secret, other_helper] = fe_gen(other.ground_truth());
    CHECK_THROWS_AS(unwrap_sk(other_secret, wk), Error);
}

TEST_CASE("helper data alone does not reproduce the secret") {
    SramPufModel model = SramPufModel::from_seed("pub", 60);
    auto [secret, helper] = fe_gen(model.ground_truth());

    // The syndrome is the reading XOR-masked by the repetition codeword, so
    // it should look balanced, and decoding without the reading must fail.
    size_t ones = 0;
    size_t used = PufParams{}.used_bits();
    for (size_t i = 0; i < used; ++i) ones += helper.syndrome[i];
    double frac = static_cast<double>(ones) / static_cast<double>(used);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);

    CHECK_THROWS_AS(fe_rep(BitVec(4096, 0), helper), Error);
    CHECK_THROWS_AS(fe_rep(BitVec(4096, 1), helper), Error);
}

TEST_CASE("device record serialization round trips without the ground truth") {
    SramPufModel model = SramPufModel::from_seed("ser", 70);
    auto [secret, helper] = fe_gen(model.ground_truth());
    Scalar sk{};
    sk[31] = 9;
    DeviceRecord rec{"ser", helper, wrap_sk(secret, sk, 3)};

    Bytes data = rec.serialize();
    CHECK(data[0] == 'D');
    CHECK(data[1] == 'S');
    CHECK(data[2] == 'P');
    CHECK(data[3] == 'F');

    DeviceRecord parsed = DeviceRecord::parse(data);
    CHECK(parsed.id == "ser");
    CHECK(parsed.helper.syndrome == helper.syndrome);
    CHECK(parsed.helper.check == helper.check);
    CHECK(unwrap_sk(secret, parsed.wrapped_sk) == sk);

    // The raw ground truth must not appear in the record.
    Bytes gt = pack_bits(model.ground_truth());
    bool found = false;
    for (size_t i = 0; i + 64 <= data.size() && !found; ++i)
        found = std::memcmp(data.data() + i, gt.data(), 64) == 0;
    CHECK_FALSE(found);
}
