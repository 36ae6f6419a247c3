#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "resetq/sx_analytics.hpp"

using namespace resetq;

namespace {

// additive model with a slow-server slowdown: S ~ Gamma(0.01, 50), X = 2/3
ServiceModel slow_gamma_add() {
    return {Combiner::additive, Gamma{0.01, 50.0}, Deterministic{2.0 / 3.0}};
}

// multiplicative model with a heavy-tailed slowdown: S ~ IG(1.5, 0.75), X = 2/3
ServiceModel ig_mult() {
    return {Combiner::multiplicative, InverseGaussian{1.5, 0.75}, Deterministic{2.0 / 3.0}};
}

// webpage download workload, milliseconds: S ~ LogNormal, X = 575.184
ServiceModel webpage() {
    return {Combiner::multiplicative, LogNormal{-0.38468998960827049, 0.99},
            Deterministic{575.184}};
}

ServiceModel gamma_gamma(Combiner c) {
    return {c, Gamma{2.3, 0.4}, Gamma{3.2, 0.5}};
}

}  // namespace

TEST_CASE("no-reset means and argument validation") {
    CHECK(mean_no_reset(slow_gamma_add()) == doctest::Approx(7.0 / 6.0).epsilon(1e-14));
    CHECK(mean_no_reset(ig_mult()) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mean_no_reset(webpage()) == doctest::Approx(639.0930104212207).epsilon(1e-11));

    CHECK_THROWS_AS(mean_no_reset({Combiner::additive, Gamma{-1.0, 1.0}, Deterministic{1.0}}),
                    ValidationError);
    CHECK_THROWS_AS(mean_poisson(slow_gamma_add(), 0.0), ValidationError);
    CHECK_THROWS_AS(mean_poisson(slow_gamma_add(), -0.5), ValidationError);
    CHECK_THROWS_AS(mean_sharp(slow_gamma_add(), 0.0), ValidationError);
    CHECK_THROWS_AS(lt_poisson(slow_gamma_add(), -0.1, 1.0, 2), ValidationError);
    CHECK_THROWS_AS(lt_poisson(slow_gamma_add(), 0.5, 1.0, 129), ValidationError);

    CHECK_THROWS_AS(validate(ResetPolicy{ResetPoisson{-1.0}}), ValidationError);
    CHECK_THROWS_AS(validate(ResetPolicy{ResetSharp{0.0}}), ValidationError);
    CHECK_THROWS_AS(validate(ResetPolicy{ResetRenewal{Gamma{-1.0, 1.0}}}), ValidationError);
    CHECK_NOTHROW(validate(ResetPolicy{ResetNone{}}));

    CHECK(policy_name(ResetPolicy{ResetNone{}}) == "none");
    CHECK(policy_name(ResetPolicy{ResetPoisson{1.0}}) == "poisson");
    CHECK(policy_name(ResetPolicy{ResetSharp{1.0}}) == "sharp");
    CHECK(policy_name(ResetPolicy{ResetRenewal{Exponential{1.0}}}) == "renewal");
    CHECK(combiner_name(Combiner::multiplicative) == "multiplicative");
    CHECK(combiner_name(Combiner::additive) == "additive");
}

TEST_CASE("poisson resetting mean, additive slow-server model") {
    auto m = slow_gamma_add();
    CHECK(mean_poisson(m, 0.2424183451739) == doctest::Approx(0.84999558444828878).epsilon(1e-12));
    CHECK(mean_poisson(m, 0.1) == doctest::Approx(0.88264539017737884).epsilon(1e-12));
    CHECK(mean_poisson(m, 0.5) == doctest::Approx(0.88366334106087046).epsilon(1e-12));
    // the no-reset mean is recovered as the rate vanishes
    CHECK(mean_poisson(m, 1e-8) == doctest::Approx(1.166666548472262).epsilon(1e-10));
    CHECK(mean_poisson(m, 1e-12) == doctest::Approx(7.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("poisson resetting mean, multiplicative heavy-tail model") {
    auto m = ig_mult();
    CHECK(mean_poisson(m, 1.0) == doctest::Approx(0.85527695861430473).epsilon(1e-12));
    CHECK(mean_poisson(m, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("memoryless slowdown makes resetting neutral") {
    // exponential S in the multiplicative model: the requirement is
    // memoryless per job, so any resetting rate leaves the mean at x/mu
    for (double mu : {0.5, 1.0, 2.7}) {
        for (double x : {0.3, 1.0, 4.0}) {
            ServiceModel m{Combiner::multiplicative, Exponential{mu}, Deterministic{x}};
            for (double r : {1e-3, 0.1, 1.0, 10.0, 250.0}) {
                CHECK(mean_poisson(m, r) == doctest::Approx(x / mu).epsilon(1e-12));
            }
            // the full transform is rate-invariant as well: mu / (mu + s x)
            Jet t = lt_poisson(m, 0.7, 3.1, 5);
            Jet ref = mu / Jet::affine(mu + 0.7 * x, x, 5, 0.7);
            for (std::size_t k = 0; k <= 5; ++k)
                CHECK(t[k] == doctest::Approx(ref[k]).epsilon(1e-11));
        }
    }
    // additive counterpart keeps a spot value: S ~ Exp(2), X = 1, r = 1
    ServiceModel add{Combiner::additive, Exponential{2.0}, Deterministic{1.0}};
    CHECK(mean_poisson(add, 1.0) == doctest::Approx(3.0774227426885679).epsilon(1e-13));
}

TEST_CASE("poisson resetting mean with a continuous jobsize law") {
    CHECK(mean_poisson(gamma_gamma(Combiner::multiplicative), 0.8) ==
          doctest::Approx(2.1615568997977601).epsilon(1e-8));
    CHECK(mean_poisson(gamma_gamma(Combiner::additive), 0.8) ==
          doctest::Approx(10.887969826520247).epsilon(1e-12));
    // the additive model needs E[e^{rX}] finite: Gamma(3.2, 0.5) diverges at 2
    CHECK_THROWS_AS(mean_poisson(gamma_gamma(Combiner::additive), 2.0), DivergentTransform);
    CHECK_THROWS_AS(mean_poisson(gamma_gamma(Combiner::additive), 5.0), DivergentTransform);
    CHECK_NOTHROW(mean_poisson(gamma_gamma(Combiner::additive), 1.99));
    // lognormal jobsize has no finite exponential moments at all
    ServiceModel ln_x{Combiner::additive, Gamma{0.01, 50.0}, LogNormal{0.2, 0.5}};
    CHECK_THROWS_AS(mean_poisson(ln_x, 0.1), DivergentTransform);
}

TEST_CASE("service-time transform jets under poisson resetting") {
    auto m6a = slow_gamma_add();
    double r0 = 0.2424183451739;

    // value 1 at s = 0 and first coefficient equal to minus the mean
    Jet t0 = lt_poisson(m6a, 0.0, r0, 1);
    CHECK(t0[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(-t0[1] == doctest::Approx(mean_poisson(m6a, r0)).epsilon(1e-12));

    Jet t = lt_poisson(m6a, 0.5, r0, 4);
    const double ref6a[5] = {0.67922664950847631, -0.5016079484335981, 0.20984788659505202,
                             -0.083799596647042854, 0.051585797397379264};
    for (std::size_t k = 0; k <= 4; ++k)
        CHECK(t[k] == doctest::Approx(ref6a[k]).epsilon(1e-11));

    Jet tb = lt_poisson(ig_mult(), 0.9, 1.3720077929, 3);
    const double ref6b[4] = {0.561859696852589, -0.28205364195894438, 0.1290557093390383,
                             -0.061126681245970196};
    for (std::size_t k = 0; k <= 3; ++k)
        CHECK(tb[k] == doctest::Approx(ref6b[k]).epsilon(1e-11));

    // directional jets scale coefficient k by direction^k
    Jet plain = lt_poisson(ig_mult(), 0.9, 1.3720077929, 6);
    Jet dir = lt_poisson_jet(ig_mult(), 0.9, 1.3720077929, 6, -0.75);
    double scale = 1.0;
    for (std::size_t k = 0; k <= 6; ++k) {
        CHECK(dir[k] == doctest::Approx(plain[k] * scale).epsilon(1e-12));
        scale *= -0.75;
    }

    // continuous jobsize: value at 0 integrates the density, first
    // coefficient still reproduces the mean
    auto mc = gamma_gamma(Combiner::multiplicative);
    Jet tc = lt_poisson(mc, 0.0, 0.8, 1);
    CHECK(tc[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(-tc[1] == doctest::Approx(mean_poisson(mc, 0.8)).epsilon(1e-7));

    // no-reset transform jet: additive factorizes, multiplicative mixes
    ServiceModel add{Combiner::additive, Exponential{2.0}, Deterministic{1.0}};
    Jet u = service_lt_jet_no_reset(add, 0.4, 3, 1.0);
    Jet refu = exp(Jet::affine(-0.4, -1.0, 3, 0.4)) * (2.0 / Jet::affine(2.4, 1.0, 3, 0.4));
    for (std::size_t k = 0; k <= 3; ++k)
        CHECK(u[k] == doctest::Approx(refu[k]).epsilon(1e-12));
    Jet um = service_lt_jet_no_reset(ig_mult(), 0.9, 2, 1.0);
    Jet refm = laplace_jet(InverseGaussian{1.5, 0.75}, 0.6, 2, 2.0 / 3.0);
    for (std::size_t k = 0; k <= 2; ++k)
        CHECK(um[k] == doctest::Approx(refm[k]).epsilon(1e-13));
}

TEST_CASE("sharp resetting means") {
    CHECK(mean_sharp(slow_gamma_add(), 2.0) ==
          doctest::Approx(0.74228630133007157).epsilon(1e-8));
    CHECK(mean_sharp(ig_mult(), 1.0) == doctest::Approx(0.80193753053056875).epsilon(1e-8));
    CHECK(mean_sharp(gamma_gamma(Combiner::multiplicative), 1.2) ==
          doctest::Approx(2.4803582185730594).epsilon(2e-6));

    // two atoms: every attempt needs exactly 6, so a period above 6 never fires
    ServiceModel atoms{Combiner::multiplicative, Deterministic{2.0}, Deterministic{3.0}};
    CHECK(mean_sharp(atoms, 6.5) == doctest::Approx(6.0).epsilon(1e-14));

    // a long period approaches the no-reset mean from below
    double far = mean_sharp(ig_mult(), 60.0);
    CHECK(far < 1.0);
    CHECK(far == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("sharp resetting detects jobs that can never finish") {
    // additive with an unbounded jobsize law: some jobs exceed any period
    ServiceModel ln_x{Combiner::additive, Gamma{0.65, 2.0}, LogNormal{0.2, 0.5}};
    CHECK_THROWS_AS(mean_sharp(ln_x, 5.0), NonCompleting);

    // additive atom jobsize: the period must clear the jobsize strictly
    auto m = slow_gamma_add();
    CHECK_THROWS_AS(mean_sharp(m, 2.0 / 3.0), NonCompleting);
    CHECK_THROWS_AS(mean_sharp(m, 0.5), NonCompleting);
    CHECK_NOTHROW(mean_sharp(m, 2.0 / 3.0 + 1e-3));

    // multiplicative slowdown atom with continuous jobsize: mass above tau/s0
    ServiceModel s_atom{Combiner::multiplicative, Deterministic{2.0}, LogNormal{0.2, 0.5}};
    CHECK_THROWS_AS(mean_sharp(s_atom, 100.0), NonCompleting);

    // two atoms at or above the period
    ServiceModel atoms{Combiner::multiplicative, Deterministic{2.0}, Deterministic{3.0}};
    CHECK_THROWS_AS(mean_sharp(atoms, 6.0), NonCompleting);
    CHECK_THROWS_AS(mean_sharp(atoms, 5.0), NonCompleting);
}

TEST_CASE("generic reset law reduces to the poisson and sharp specials") {
    // exponential reset times are a poisson clock
    for (double r : {0.3, 1.7}) {
        CHECK(mean_generic_reset(slow_gamma_add(), Exponential{r}) ==
              doctest::Approx(mean_poisson(slow_gamma_add(), r)).epsilon(1e-7));
        CHECK(mean_generic_reset(ig_mult(), Exponential{r}) ==
              doctest::Approx(mean_poisson(ig_mult(), r)).epsilon(1e-7));
    }
    // deterministic reset times are a sharp period (exact dispatch)
    CHECK(mean_generic_reset(ig_mult(), Deterministic{1.0}) == mean_sharp(ig_mult(), 1.0));
    CHECK(mean_generic_reset(slow_gamma_add(), Deterministic{2.0}) ==
          mean_sharp(slow_gamma_add(), 2.0));

    // frozen values for a gamma reset law
    CHECK(mean_generic_reset(ig_mult(), Gamma{2.0, 0.5}) ==
          doctest::Approx(0.83096909707542714).epsilon(1e-7));
    CHECK(mean_generic_reset(slow_gamma_add(), Gamma{2.0, 0.5}) ==
          doctest::Approx(0.98207680810833140).epsilon(1e-7));

    // slow reset clocks approach the no-reset mean
    CHECK(mean_generic_reset(ig_mult(), Exponential{1e-7}) ==
          doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("benefit diagnosis thresholds and slopes") {
    // multiplicative: coefficient of variation of S against 1
    {
        ServiceModel m{Combiner::multiplicative, InverseGaussian{1.5, 1.4}, Deterministic{2.0 / 3.0}};
        auto rep = benefit_diagnosis(m);
        CHECK(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(1.03509833901353).epsilon(1e-12));
        CHECK(rep.condition_rhs == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rep.slope_at_zero == doctest::Approx(-0.0357142857142857).epsilon(1e-12));
        CHECK(rep.mean_no_reset == doctest::Approx(1.0).epsilon(1e-14));
    }
    {
        ServiceModel m{Combiner::multiplicative, InverseGaussian{1.5, 1.6}, Deterministic{2.0 / 3.0}};
        auto rep = benefit_diagnosis(m);
        CHECK_FALSE(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(0.968245836551854).epsilon(1e-12));
        CHECK(rep.slope_at_zero == doctest::Approx(0.03125).epsilon(1e-12));
    }
    // additive: variance surplus of S against the squared mean total
    {
        ServiceModel m{Combiner::additive, Gamma{0.17, 1.0 / 0.34}, Deterministic{2.0 / 3.0}};
        auto rep = benefit_diagnosis(m);
        CHECK(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(1.47058823529412).epsilon(1e-12));
        CHECK(rep.condition_rhs == doctest::Approx(1.36111111111111).epsilon(1e-12));
        CHECK(rep.slope_at_zero == doctest::Approx(-0.0547385620915033).epsilon(1e-12));
    }
    {
        ServiceModel m{Combiner::additive, Gamma{0.20, 2.5}, Deterministic{2.0 / 3.0}};
        auto rep = benefit_diagnosis(m);
        CHECK_FALSE(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(1.25).epsilon(1e-12));
        CHECK(rep.slope_at_zero == doctest::Approx(0.0555555555555556).epsilon(1e-12));
    }
    // additive with jobsize variance working against resetting
    {
        ServiceModel m{Combiner::additive, Gamma{0.01, 50.0}, Gamma{0.017, 2.0 / (3 * 0.017)}};
        auto rep = benefit_diagnosis(m);
        CHECK_FALSE(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(-1.1437908496732).epsilon(1e-12));
        CHECK(rep.slope_at_zero == doctest::Approx(1.25245098039216).epsilon(1e-12));
    }
    {
        ServiceModel m{Combiner::additive, Gamma{0.01, 50.0}, Gamma{0.021, 2.0 / (3 * 0.021)}};
        auto rep = benefit_diagnosis(m);
        CHECK(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(3.83597883597884).epsilon(1e-12));
        CHECK(rep.slope_at_zero == doctest::Approx(-1.23743386243386).epsilon(1e-12));
    }
    // webpage workload: lognormal cv above 1, so resetting helps
    {
        auto rep = benefit_diagnosis(webpage());
        CHECK(rep.beneficial);
        CHECK(rep.condition_lhs == doctest::Approx(1.2902413343542887).epsilon(1e-12));
        CHECK(rep.slope_at_zero < 0.0);
    }
}

TEST_CASE("small-rate slope of the poisson mean matches the diagnosis") {
    testref::Mixer mix(0x5107e5ul);
    auto check_slope = [](const ServiceModel &m, double tol_scale) {
        auto rep = benefit_diagnosis(m);
        double mnr = rep.mean_no_reset;
        double h = 1e-4 / (1.0 + mnr);
        auto secant = [&](double hh) { return (mean_poisson(m, hh) - mnr) / hh; };
        // one Richardson step removes the linear error term
        double fd = 2.0 * secant(h / 2) - secant(h);
        double es = mean(m.slowdown), es2 = moment(m.slowdown, 2);
        double ex = mean(m.jobsize), ex2 = moment(m.jobsize, 2);
        double mag = m.combiner == Combiner::multiplicative
                         ? ex2 * (es * es + 0.5 * es2)
                         : ex * es + es * es + 0.5 * (ex2 + es2);
        CHECK(std::fabs(fd - rep.slope_at_zero) <= tol_scale * mag);
    };
    for (int i = 0; i < 10; ++i) {
        DistributionSpec s;
        switch (i % 3) {
            case 0: s = Exponential{mix.in(0.4, 2.5)}; break;
            case 1: s = Gamma{mix.in(0.3, 4.0), mix.in(0.3, 2.5)}; break;
            default: s = InverseGaussian{mix.in(0.5, 2.5), mix.in(0.4, 3.0)}; break;
        }
        double x = mix.in(0.3, 3.0);
        check_slope({Combiner::multiplicative, s, Deterministic{x}}, 2e-3);
        check_slope({Combiner::additive, s, Deterministic{x}}, 2e-3);
        check_slope({Combiner::additive, s, Gamma{mix.in(0.5, 3.0), mix.in(0.2, 1.0)}}, 2e-3);
    }
    // multiplicative with a continuous jobsize goes through quadrature, so
    // the comparison is looser
    check_slope(gamma_gamma(Combiner::multiplicative), 1e-2);
}

TEST_CASE("optimal poisson rate") {
    {
        auto opt = optimal_poisson_rate(slow_gamma_add());
        CHECK(opt.monotone == Monotone::no);
        CHECK(opt.parameter == doctest::Approx(0.24241835750413375).epsilon(1e-5));
        CHECK(opt.mean == doctest::Approx(0.84999558444828865).epsilon(1e-10));
        CHECK(opt.mean_no_reset == doctest::Approx(7.0 / 6.0).epsilon(1e-14));
        CHECK(opt.mean < opt.mean_no_reset);
    }
    {
        auto opt = optimal_poisson_rate(ig_mult());
        CHECK(opt.parameter == doctest::Approx(1.3720078024403661).epsilon(1e-5));
        CHECK(opt.mean == doctest::Approx(0.85095259041331947).epsilon(1e-10));
    }
    // rate capped by the jobsize transform: X ~ Exp(1) keeps r below 1
    {
        ServiceModel m{Combiner::additive, Gamma{0.01, 50.0}, Exponential{1.0}};
        auto opt = optimal_poisson_rate(m);
        CHECK(opt.monotone == Monotone::no);
        CHECK(opt.parameter == doctest::Approx(0.0778254844315492).epsilon(1e-4));
        CHECK(opt.mean == doctest::Approx(1.3073486191504783).epsilon(1e-9));
    }
    // not beneficial: stay at rate zero
    {
        ServiceModel m{Combiner::multiplicative, InverseGaussian{1.5, 1.6}, Deterministic{2.0 / 3.0}};
        auto opt = optimal_poisson_rate(m);
        CHECK(opt.parameter == 0.0);
        CHECK(opt.monotone == Monotone::increasing);
        CHECK(opt.mean == doctest::Approx(1.0).epsilon(1e-14));
    }
    // mean decreasing all the way: a very dispersed multiplicative slowdown
    // pushes the optimum off to infinity
    {
        ServiceModel m{Combiner::multiplicative, Gamma{0.01, 50.0}, Deterministic{2.0 / 3.0}};
        auto opt = optimal_poisson_rate(m);
        CHECK(opt.monotone == Monotone::decreasing);
        CHECK(opt.parameter > 1e6);
        CHECK(opt.mean < 1e-3 * opt.mean_no_reset);
    }
    // beneficial additive model whose jobsize admits no exponential moment
    {
        ServiceModel m{Combiner::additive, Gamma{0.01, 50.0}, LogNormal{0.2, 0.5}};
        CHECK_THROWS_AS(optimal_poisson_rate(m), DivergentTransform);
    }
    // a caller-supplied bracket is used as-is
    {
        auto opt = optimal_poisson_rate(slow_gamma_add(), Bracket{0.1, 0.5});
        CHECK(opt.parameter == doctest::Approx(0.24241835750413375).epsilon(1e-5));
    }
}

TEST_CASE("optimal sharp period") {
    {
        auto opt = optimal_sharp_period(slow_gamma_add());
        CHECK(opt.monotone == Monotone::no);
        CHECK(opt.parameter == doctest::Approx(0.79463570683959532).epsilon(5e-5));
        CHECK(opt.mean == doctest::Approx(0.71203464719354024).epsilon(1e-8));
        CHECK(opt.mean < opt.mean_no_reset);
    }
    {
        auto opt = optimal_sharp_period(ig_mult());
        CHECK(opt.parameter == doctest::Approx(0.58325936029700104).epsilon(5e-4));
        CHECK(opt.mean == doctest::Approx(0.77617695453132370).epsilon(1e-7));
    }
    // additive with a heavy lower tail on completion probability: the search
    // has to walk its lower end away from the non-completing region
    {
        ServiceModel m{Combiner::additive, InverseGaussian{1.5, 0.75}, Deterministic{0.4}};
        auto opt = optimal_sharp_period(m);
        CHECK(opt.monotone == Monotone::no);
        CHECK(opt.parameter == doctest::Approx(2.37023443426347).epsilon(1e-3));
        CHECK(opt.mean == doctest::Approx(1.7512491754202155).epsilon(1e-7));
        CHECK(opt.mean_no_reset == doctest::Approx(1.9).epsilon(1e-14));
    }
    // not beneficial: no finite period helps
    {
        ServiceModel m{Combiner::multiplicative, InverseGaussian{1.5, 1.6}, Deterministic{2.0 / 3.0}};
        auto opt = optimal_sharp_period(m);
        CHECK(std::isinf(opt.parameter));
        CHECK(opt.monotone == Monotone::decreasing);
        CHECK(opt.mean == doctest::Approx(1.0).epsilon(1e-14));
    }
    // beneficial additive model with unbounded jobsize: no period completes
    {
        ServiceModel m{Combiner::additive, Gamma{0.01, 50.0}, LogNormal{0.2, 0.5}};
        CHECK_THROWS_AS(optimal_sharp_period(m), NonCompleting);
    }
}

TEST_CASE("webpage workload optima (milliseconds)") {
    auto m = webpage();
    CHECK(mean_poisson(m, 1e-3) == doctest::Approx(607.5286160189054).epsilon(5e-8));
    CHECK(mean_poisson(m, 5e-4) == doctest::Approx(610.4825517216306).epsilon(5e-8));
    CHECK(mean_sharp(m, 500.0) == doctest::Approx(581.3712182845827).epsilon(1e-7));
    {
        auto opt = optimal_poisson_rate(m);
        CHECK(opt.monotone == Monotone::no);
        CHECK(opt.parameter == doctest::Approx(8.706664588597006e-4).epsilon(1e-2));
        CHECK(opt.mean == doctest::Approx(607.2411232836452).epsilon(1e-6));
    }
    {
        auto opt = optimal_sharp_period(m);
        CHECK(opt.parameter == doctest::Approx(698.933362748524).epsilon(5e-4));
        CHECK(opt.mean == doctest::Approx(574.6380122320954).epsilon(1e-7));
    }
}
