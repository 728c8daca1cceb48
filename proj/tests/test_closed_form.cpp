#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <numbers>

#include "riskit/closed_form.hpp"
#include "riskit/random.hpp"
#include "support.hpp"

using namespace riskit;

namespace {

PhaseShifts random_phases(std::size_t n, std::uint64_t seed)
{
    Stream rng = make_stream(seed, StreamTag::phases);
    return PhaseShifts::random(n, rng);
}

// Scenario with every angle chosen so that the user arrival equals the RIS departure.
Scenario matched_angle_scenario(std::size_t n)
{
    auto cfg = testing::linear_config(4, n, 2);
    AngleSet a;
    a.bs_arrival_azimuth = 0.4;
    a.bs_arrival_elevation = 1.1;
    a.ris_departure_azimuth = 2.2;
    a.ris_departure_elevation = 0.7;
    a.ris_arrival_azimuth = {2.2, 2.2};
    a.ris_arrival_elevation = {0.7, 0.7};
    cfg.angles = a;
    return build_scenario(cfg, 1);
}

StatisticalCsi symmetric_csi(std::size_t m, std::size_t n, double c, double gamma, double snr, double delta,
                             double epsilon)
{
    StatisticalCsi csi = make_statistical_csi(testing::small_scenario(m, n, 2));
    csi.delta = delta;
    csi.epsilon = {epsilon, epsilon};
    csi.composite_loss = {c, c};
    csi.direct_loss = {gamma, gamma};
    csi.user_ris_loss = {1.0, 1.0};
    csi.tx_power_w = {snr, snr};
    csi.noise_power_w = 1.0;
    return csi;
}

}  // namespace

TEST_SUITE("closed_form")
{
    TEST_CASE("phase offsets")
    {
        const Scenario s = testing::small_scenario(4, 9, 3);
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(phase_offset(s, 0, k) == 0.0);
        CHECK_THROWS_AS(phase_offset(s, 9, 0), std::out_of_range);
        CHECK_THROWS_AS(phase_offset(s, 0, 3), std::out_of_range);

        const Scenario same = matched_angle_scenario(9);
        for (std::size_t n = 0; n < 9; ++n)
            CHECK(phase_offset(same, n, 1) == doctest::Approx(0.0));

        auto cfg = testing::linear_config(4, 4, 1);
        AngleSet a;
        a.bs_arrival_azimuth = 0.0;
        a.bs_arrival_elevation = 0.0;
        a.ris_departure_azimuth = 0.0;
        a.ris_departure_elevation = std::numbers::pi / 2;
        a.ris_arrival_azimuth = {std::numbers::pi / 2};
        a.ris_arrival_elevation = {std::numbers::pi / 2};
        cfg.angles = a;
        const Scenario hand = build_scenario(cfg, 1);
        const double expected[] = {0.0, 0.0, std::numbers::pi, std::numbers::pi};
        for (std::size_t n = 0; n < 4; ++n)
            CHECK(std::remainder(phase_offset(hand, n, 0) - expected[n], kTwoPi) == doctest::Approx(0.0));
    }

    TEST_CASE("composite loss")
    {
        const Scenario s = testing::small_scenario(4, 9, 3);
        for (std::size_t k = 0; k < 3; ++k) {
            const double expected = s.fading.ris_bs_loss * s.fading.user_ris_loss[k] /
                                    ((s.fading.ris_bs_rician + 1) * (s.fading.user_ris_rician[k] + 1));
            CHECK(composite_loss(s, k) == expected);
        }
    }

    TEST_CASE("array gain")
    {
        const Scenario s = testing::small_scenario(4, 16, 3);
        const StatisticalCsi csi = make_statistical_csi(s);
        for (std::size_t k = 0; k < 3; ++k) {
            const std::complex<double> f = array_gain(csi, aligned_phases(csi, k), k);
            CHECK(f.real() == doctest::Approx(16.0).epsilon(1e-13));
            CHECK(std::abs(f.imag()) < 1e-12);
        }
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const PhaseShifts p = random_phases(16, seed);
            const testing::Oracle o = testing::make_oracle(s, p);
            for (std::size_t k = 0; k < 3; ++k) {
                const std::complex<double> f = array_gain(csi, p, k);
                CHECK(std::abs(f) <= 16.0 + 1e-12);
                CHECK(std::abs(f - std::complex<double>(o.f[k])) < 1e-10);
            }
        }
        const Scenario two = matched_angle_scenario(4);
        const StatisticalCsi csi2 = make_statistical_csi(two);
        const std::complex<double> cancel = array_gain(csi2, PhaseShifts({0.0, std::numbers::pi, 0.0, std::numbers::pi}), 0);
        CHECK(std::abs(cancel) < 1e-12);
        CHECK_THROWS(array_gain(csi, PhaseShifts::zeros(3), 0));
    }

    TEST_CASE("terms match the independent transcription")
    {
        for (auto [m, n, k] : {std::tuple{4, 4, 2}, std::tuple{9, 16, 3}, std::tuple{16, 9, 4}}) {
            const Scenario s = testing::small_scenario(m, n, k, 100 + m);
            const StatisticalCsi csi = make_statistical_csi(s);
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const PhaseShifts p = random_phases(n, seed);
                const testing::Oracle o = testing::make_oracle(s, p);
                for (int u = 0; u < k; ++u) {
                    CHECK(testing::rel_diff(signal_term(csi, p, u), double(o.signal(u))) < 1e-12);
                    CHECK(testing::rel_diff(noise_term(csi, p, u), double(o.noise(u))) < 1e-12);
                    CHECK(testing::rel_diff(ergodic_rate(csi, p, u), double(o.rate(u))) < 1e-12);
                    for (int i = 0; i < k; ++i)
                        if (i != u)
                            CHECK(testing::rel_diff(interference_term(csi, p, u, i), double(o.interference(u, i))) <
                                  1e-12);
                }
            }
        }
    }

    TEST_CASE("realistic path losses keep full precision")
    {
        const Scenario s = build_scenario(testing::reference_config(), 1);
        const StatisticalCsi csi = make_statistical_csi(s);
        const PhaseShifts p = random_phases(49, 1);
        const testing::Oracle o = testing::make_oracle(s, p);
        for (int u = 0; u < 4; ++u) {
            CHECK(signal_term(csi, p, u) > 0.0);
            CHECK(testing::rel_diff(signal_term(csi, p, u), double(o.signal(u))) < 1e-10);
            CHECK(testing::rel_diff(ergodic_rate(csi, p, u), double(o.rate(u))) < 1e-10);
        }
    }

    TEST_CASE("term reductions")
    {
        StatisticalCsi csi = make_statistical_csi(testing::small_scenario(4, 9, 2));
        const PhaseShifts p = random_phases(9, 3);

        StatisticalCsi no_cascade = csi;
        no_cascade.bs_antennas = 2;
        no_cascade.composite_loss = {0.0, 0.0};
        no_cascade.direct_loss = {1.0, 1.0};
        CHECK(signal_term(no_cascade, p, 0) == doctest::Approx(6.0));
        no_cascade.direct_loss = {0.5, 1.5};
        CHECK(interference_term(no_cascade, p, 0, 1) == doctest::Approx(2 * 0.5 * 1.5));
        no_cascade.bs_antennas = 49;
        no_cascade.direct_loss = {2.0, 2.0};
        CHECK(noise_term(no_cascade, p, 0) == doctest::Approx(98.0));

        StatisticalCsi nlos = csi;
        nlos.delta = 0.0;
        nlos.epsilon = {0.0, 0.0};
        nlos.direct_loss = {0.0, 0.0};
        const double M = 4, N = 9, c = nlos.composite_loss[0];
        CHECK(noise_term(nlos, p, 0) == doctest::Approx(M * c * N).epsilon(1e-14));
        CHECK(signal_term(nlos, p, 0) ==
              doctest::Approx(M * c * c * (M * N * N + N * N + M * N + N)).epsilon(1e-14));
    }

    TEST_CASE("interference is symmetric and requires distinct users")
    {
        const StatisticalCsi csi = make_statistical_csi(testing::small_scenario(9, 16, 4));
        const PhaseShifts p = random_phases(16, 9);
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t i = 0; i < 4; ++i)
                if (i != k)
                    CHECK(testing::rel_diff(interference_term(csi, p, k, i), interference_term(csi, p, i, k)) <
                          1e-13);
        CHECK_THROWS_AS(interference_term(csi, p, 1, 1), std::invalid_argument);
    }

    TEST_CASE("rate conventions")
    {
        StatisticalCsi csi = make_statistical_csi(testing::small_scenario(4, 9, 3));
        const PhaseShifts p = random_phases(9, 1);
        StatisticalCsi silent = csi;
        silent.tx_power_w[1] = 0.0;
        CHECK(ergodic_rate(silent, p, 1) == 0.0);
        silent.tx_power_w = {0.0, 0.0, 0.0};
        CHECK(sum_rate(silent, p) == 0.0);

        SinrFraction zero{0.0L, 0.0L};
        CHECK(zero.value() == 0.0);
        SinrFraction bad{1.0L, 0.0L};
        CHECK_THROWS_AS(bad.value(), std::domain_error);

        const RateBreakdown b = rate_breakdown(csi, p);
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(b.rate[k] == doctest::Approx(std::log2(1 + b.sinr[k])).epsilon(1e-14));
            CHECK(b.rate[k] == ergodic_rate(csi, p, k));
            CHECK(b.signal[k] >= 0.0);
            CHECK(b.noise[k] >= 0.0);
            CHECK(b.interference_at(k, k) == 0.0);
            total += b.rate[k];
        }
        CHECK(b.sum_rate == doctest::Approx(total).epsilon(1e-15));
    }

    TEST_CASE("single user sum rate and monotone power")
    {
        StatisticalCsi csi = make_statistical_csi(testing::small_scenario(4, 9, 1));
        const PhaseShifts p = random_phases(9, 2);
        CHECK(sum_rate(csi, p) == ergodic_rate(csi, p, 0));
        double previous = -1.0;
        for (double power = 1e-3; power < 1e4; power *= 3.0) {
            csi.tx_power_w = {power};
            const double r = ergodic_rate(csi, p, 0);
            CHECK(r >= previous);
            previous = r;
        }
    }

    TEST_CASE("user relabeling leaves the sum rate unchanged")
    {
        const Scenario s = testing::small_scenario(9, 16, 3);
        const PhaseShifts p = random_phases(16, 5);
        Scenario permuted = s;
        const int order[] = {2, 0, 1};
        for (int k = 0; k < 3; ++k) {
            permuted.fading.user_ris_rician[k] = s.fading.user_ris_rician[order[k]];
            permuted.fading.user_ris_loss[k] = s.fading.user_ris_loss[order[k]];
            permuted.fading.direct_loss[k] = s.fading.direct_loss[order[k]];
            permuted.budget.tx_power_w[k] = s.budget.tx_power_w[order[k]];
            permuted.angles.ris_arrival_azimuth[k] = s.angles.ris_arrival_azimuth[order[k]];
            permuted.angles.ris_arrival_elevation[k] = s.angles.ris_arrival_elevation[order[k]];
        }
        CHECK(testing::rel_diff(sum_rate(s, p), sum_rate(permuted, p)) < 1e-13);
    }

    TEST_CASE("phase periodicity")
    {
        const StatisticalCsi csi = make_statistical_csi(testing::small_scenario(4, 9, 3));
        const PhaseShifts p = random_phases(9, 6);
        std::vector<double> shifted(p.values().begin(), p.values().end());
        for (double& x : shifted)
            x += kTwoPi;
        const PhaseShifts q(shifted);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(testing::rel_diff(signal_term(csi, p, k), signal_term(csi, q, k)) < 1e-12);
            CHECK(testing::rel_diff(noise_term(csi, p, k), noise_term(csi, q, k)) < 1e-12);
        }
        CHECK(testing::rel_diff(sum_rate(csi, p), sum_rate(csi, q)) < 1e-12);
    }

    TEST_CASE("aligned phases maximize the single-user rate")
    {
        const StatisticalCsi csi = make_statistical_csi(testing::small_scenario(4, 4, 1));
        const double best = sum_rate(csi, aligned_phases(csi, 0));
        Stream rng = make_stream(77, StreamTag::phases);
        double sampled = 0.0;
        for (int t = 0; t < 100'000; ++t)
            sampled = std::max(sampled, sum_rate(csi, PhaseShifts::random(4, rng)));
        CHECK(sampled <= best * (1 + 1e-12));
    }

    TEST_CASE("determinism")
    {
        const Scenario s = testing::small_scenario(9, 9, 3);
        const PhaseShifts p = random_phases(9, 4);
        CHECK(sum_rate(s, p) == sum_rate(s, p));
        CHECK(rate_breakdown(make_statistical_csi(s), p).sinr == rate_breakdown(make_statistical_csi(s), p).sinr);
    }

    TEST_CASE("no-RIS reduction")
    {
        StatisticalCsi csi = symmetric_csi(49, 16, 0.0, 1.0, 1.0, 1.0, 2.0);
        CHECK(sinr_no_ris(csi, 0).value() == doctest::Approx(25.0).epsilon(1e-14));
        CHECK(rate_no_ris(csi, 0) == doctest::Approx(4.70043971814109).epsilon(1e-13));
        csi.direct_loss = {0.0, 1.0};
        CHECK(rate_no_ris(csi, 0) == 0.0);

        const StatisticalCsi base = make_statistical_csi(testing::small_scenario(16, 9, 3));
        StatisticalCsi blocked = base;
        std::fill(blocked.composite_loss.begin(), blocked.composite_loss.end(), 0.0);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const PhaseShifts p = random_phases(9, seed);
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(testing::rel_diff(ergodic_rate(blocked, p, k), rate_no_ris(base, k)) < 1e-10);
        }
        StatisticalCsi single = base;
        single.users = 1;
        single.composite_loss = {0.0};
        single.direct_loss = {0.3};
        single.tx_power_w = {2.0};
        single.epsilon.resize(1);
        single.user_ris_loss.resize(1);
        single.phase_offset.resize(9);
        single.los_gram.resize(1);
        const double expected = std::log2(1 + 2.0 * 17 * 0.3 / single.noise_power_w);
        CHECK(ergodic_rate(single, random_phases(9, 1), 0) == doctest::Approx(expected).epsilon(1e-13));
    }

    TEST_CASE("pure NLoS reduction")
    {
        const StatisticalCsi base = make_statistical_csi(testing::small_scenario(16, 9, 3));
        StatisticalCsi nlos = base;
        nlos.delta = 0.0;
        std::fill(nlos.epsilon.begin(), nlos.epsilon.end(), 0.0);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const PhaseShifts p = random_phases(9, seed);
            const auto gains = array_gains(nlos, p);
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(testing::rel_diff(sinr_fraction(nlos, gains, k).value(), sinr_nlos(nlos, k)) < 1e-10);
        }

        StatisticalCsi one = symmetric_csi(16, 9, 0.4, 0.0, 3.0, 0.0, 0.0);
        one.users = 1;
        for (auto* v : {&one.composite_loss, &one.direct_loss, &one.tx_power_w, &one.epsilon, &one.user_ris_loss})
            v->resize(1);
        CHECK(sinr_nlos(one, 0) == doctest::Approx(3.0 * 0.4 * 17 * 10).epsilon(1e-14));

        StatisticalCsi direct_only = symmetric_csi(16, 9, 0.0, 0.6, 2.0, 0.0, 0.0);
        CHECK(testing::rel_diff(sinr_nlos(direct_only, 0), sinr_no_ris(direct_only, 0).value()) < 1e-14);
    }

    TEST_CASE("NLoS crossover thresholds")
    {
        SymmetricPair pair{49, 49, 1e-6, 1e-6, 1.0, 0.0};
        const NlosCrossover x = nlos_crossover(pair);
        CHECK(x.snr_threshold == doctest::Approx(1.0625e6).epsilon(1e-12));

        SymmetricPair small{2, 7, 1.0, 1.0, 1.0, 0.0};
        CHECK(nlos_crossover(small).snr_threshold == doctest::Approx(9.0).epsilon(1e-14));

        for (double scale : {0.5, 0.9, 1.1, 2.0}) {
            const double snr = scale * x.snr_threshold;
            StatisticalCsi csi = symmetric_csi(49, 49, 1e-6, 1e-6, snr, 0.0, 0.0);
            const double ris = sinr_nlos(csi, 0);
            const double direct = sinr_no_ris(csi, 0).value();
            if (scale < 1.0)
                CHECK(ris > direct);
            else
                CHECK(ris < direct);
        }

        // element threshold: RIS wins for N above it at a fixed SNR
        pair.snr = 1.5e6;
        const double n_star = nlos_crossover(pair).element_threshold;
        for (std::size_t n : {std::size_t(49), std::size_t(81)}) {
            StatisticalCsi csi = symmetric_csi(49, n, 1e-6, 1e-6, pair.snr, 0.0, 0.0);
            CHECK((sinr_nlos(csi, 0) > sinr_no_ris(csi, 0).value()) == (double(n) > n_star));
        }

        CHECK_THROWS_AS(nlos_crossover({1, 49, 1e-6, 1e-6, 1.0, 0.0}), std::domain_error);
        CHECK_THROWS_AS(nlos_crossover({49, 49, 0.0, 1e-6, 1.0, 0.0}), std::domain_error);
    }

    TEST_CASE("random-phase limit")
    {
        StatisticalCsi csi = symmetric_csi(49, 16, 1e-3, 1e-3, 1.0, 0.0, 1.0);
        CHECK(sinr_random_limit(csi, 0) == doctest::Approx(50.0).epsilon(1e-14));
        csi.delta = 1.0;
        CHECK(sinr_random_limit(csi, 0) == doctest::Approx(248.0 / 52.0).epsilon(1e-14));
        csi.delta = 1e6;
        CHECK(sinr_random_limit(csi, 0) == doctest::Approx(2.0).epsilon(1e-5));

        StatisticalCsi one = csi;
        one.users = 1;
        for (auto* v : {&one.composite_loss, &one.direct_loss, &one.tx_power_w, &one.epsilon, &one.user_ris_loss})
            v->resize(1);
        CHECK_THROWS_AS(sinr_random_limit(one, 0), std::domain_error);
    }

    TEST_CASE("random-phase crossover")
    {
        CHECK(random_crossover({49, 49, 0.0, 0.0, 0.0, 1.0}) == doctest::Approx(248.0 / 2352.0).epsilon(1e-14));
        CHECK(random_crossover({2, 49, 0.0, 0.0, 0.0, 1.0}) == doctest::Approx(6.5).epsilon(1e-14));
        const double big = random_crossover({100'000, 49, 0.0, 0.0, 0.0, 2.0});
        CHECK(big * 100'000 == doctest::Approx((2 * 4 + 4 + 1) / 4.0).epsilon(1e-3));
        CHECK_THROWS_AS(random_crossover({49, 49, 0.0, 0.0, 0.0, 0.0}), std::domain_error);
        CHECK_THROWS_AS(random_crossover({1, 49, 0.0, 0.0, 0.0, 1.0}), std::domain_error);
    }

    TEST_CASE("cascaded moments")
    {
        const Scenario s = testing::small_scenario(9, 16, 2);
        StatisticalCsi csi = make_statistical_csi(s);
        const PhaseShifts p = random_phases(16, 8);
        StatisticalCsi blocked = csi;
        blocked.direct_loss = {0.0, 0.0};
        const CascadedMoments cm = cascaded_moments(csi, p, 0, 1);
        CHECK(cm.second == noise_term(blocked, p, 0));
        CHECK(cm.fourth == signal_term(blocked, p, 0));
        CHECK(cm.cross == interference_term(blocked, p, 0, 1));
        CHECK(cascaded_moments(csi, p, 1, 1).cross == 0.0);

        StatisticalCsi nlos = csi;
        nlos.delta = 0.0;
        nlos.epsilon = {0.0, 0.0};
        CHECK(cascaded_moments(nlos, p, 0, 1).second ==
              doctest::Approx(9.0 * nlos.composite_loss[0] * 16).epsilon(1e-14));

        StatisticalCsi los = csi;
        los.delta = 1e6;
        los.epsilon = {1e6, 1e6};
        const CascadedMoments lm = cascaded_moments(los, aligned_phases(los, 0), 0, 1);
        const double c = los.composite_loss[0];
        const double lead = 81.0 * c * c * 1e24 * std::pow(16.0, 4);
        CHECK(lm.fourth == doctest::Approx(lead).epsilon(1e-4));
    }
}
