// Acceptance harness: one PASS/FAIL line per criterion.
//
// Exit status is 0 when the set of failing criteria equals the set given with
// --known-failure (empty by default), 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "property_checks.hpp"
#include "selfsim/selfsim.hpp"

using namespace selfsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  std::ostringstream detail;
  bool pass = true;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
  template <class T>
  Line& operator<<(const T& v) {
    detail << v;
    return *this;
  }
};

double sup_on(const GridFunction& f, double lo, double hi, const std::function<double(double)>& ref) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f.grid()[i];
    if (x >= lo && x <= hi) m = std::max(m, std::abs(f[i] - ref(x)));
  }
  return m;
}

double kernel_defect(const GridPtr& g) {
  return sup_on(linearized_apply(GridFunction::sample(g, [](double x) { return m1(x); })), 1e-3, 20.0,
                [](double) { return 0.0; });
}

double bump(double x) { return x > 1.0 && x < 3.0 ? std::exp(-1.0 / ((x - 1.0) * (3.0 - x))) : 0.0; }

double inverse_defect(const GridPtr& g, const std::function<double(double)>& f, WeightParams w) {
  const auto gf = GridFunction::sample(g, f);
  return weighted_distance(linearized_apply(inverse_apply(gf)), gf, w) / weighted_norm(gf, w);
}

WeightParams weight_for(double alpha) { return {-alpha, default_beta(alpha)}; }

const std::vector<double> kSweep = {0.2, 0.1, 0.05, 0.025, 0.0125};

struct SweepCase {
  double alpha = 0.0;
  std::vector<ProfileSolution> sols;
  double seconds = 0.0;
};

Line c1() {
  Line l;
  const auto g = default_grid();
  for (double a : {0.25, 0.5, 0.75}) {
    const auto t0 = Clock::now();
    const auto spec = power_kernel(0.0, a);
    const auto s = solve_profile(spec, {}, exponential_profile(g));
    const double secs = seconds_since(t0);
    const double d = weighted_distance(s.profile, exponential_profile(g), weight_for(a));
    const double r = selfsim_residual(s.profile, spec);
    l << " alpha=" << a << ": dist=" << d << " residual=" << r << " time=" << secs << "s;";
    l.require(s.converged, "converged");
    l.require(d <= 1e-6, "distance <= 1e-6");
    l.require(r <= 1e-6, "residual <= 1e-6");
    l.require(secs <= 10.0, "runtime <= 10 s");
  }
  return l;
}

Line c2() {
  Line l;
  const double e256 = kernel_defect(make_grid(1e-5, 40.0, 256));
  const double e512 = kernel_defect(make_grid(1e-5, 40.0, 512));
  const double e1024 = kernel_defect(default_grid());
  const double order = std::log2(e256 / e512);
  l << " sup|L[m1]| n=256: " << e256 << ", n=512: " << e512 << ", n=1024: " << e1024
    << "; observed order 256->512: " << order;
  l.require(e1024 <= 1e-8, "sup <= 1e-8 at n=1024");
  l.require(order >= 2.0, "order >= 2");
  return l;
}

Line c3() {
  Line l;
  // Order from 256 -> 512: at n = 1024 the smoothest inputs already sit on the
  // truncation floor set by x_min.
  const auto fine = default_grid(), mid = make_grid(1e-5, 40.0, 512), coarse = make_grid(1e-5, 40.0, 256);
  const std::vector<std::pair<std::string, std::function<double(double)>>> gs = {
      {"exp", [](double x) { return std::exp(-x); }},
      {"xexp2", [](double x) { return x * std::exp(-2.0 * x); }},
      {"bump", bump}};
  for (double a : {0.25, 0.5, 0.75}) {
    const auto w = weight_for(a);
    double worst = 0.0, worst_order = 1e9;
    for (const auto& [name, f] : gs) {
      const double df = inverse_defect(fine, f, w);
      worst = std::max(worst, df);
      worst_order = std::min(worst_order, std::log2(inverse_defect(coarse, f, w) / inverse_defect(mid, f, w)));
    }
    l << " alpha=" << a << ": max defect " << worst << ", min order 256->512 " << worst_order << ";";
    l.require(worst <= 1e-4, "defect <= 1e-4");
    l.require(worst_order >= 2.0, "order >= 2");
  }
  const auto a0 = inverse_apply(GridFunction::sample(fine, [](double x) { return std::exp(-x); }));
  const double cf = sup_on(a0, 0.01, 20.0, [](double x) { return (x - 2.0) * std::exp(-x); });
  l << " sup|A0[e]-(x-2)e^{-x}| on [0.01,20]: " << cf;
  l.require(cf <= 1e-6, "closed form <= 1e-6");
  return l;
}

Line c4() {
  Line l;
  const auto g = default_grid();
  double worst = 0.0;
  for (const auto& f : selfsim::detail::random_smooth(20, 20170601))
    worst = std::max(worst, std::abs(first_moment(inverse_apply(GridFunction::sample(g, f)))));
  l << " max |M1(A0[g])| over 20 inputs: " << worst;
  l.require(worst <= 1e-10, "<= 1e-10");
  return l;
}

Line c5() {
  Line l;
  const auto f = GridFunction::sample(default_grid(), [](double x) { return m1(x); });
  double lap = 0.0;
  for (double q : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0})
    lap = std::max(lap, std::abs(desing_laplace(f, q) + q / ((1.0 + q) * (1.0 + q))));
  double ode = 0.0;
  for (double r : laplace_ode_residual(f, {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0})) ode = std::max(ode, std::abs(r));
  l << " max|T[m1](q)+q/(1+q)^2|: " << lap << ", ODE residual: " << ode;
  l.require(lap <= 1e-8, "transform <= 1e-8");
  l.require(ode <= 1e-6, "ODE <= 1e-6");
  return l;
}

Line c6() {
  Line l;
  VerifyOptions o;
  o.only = {"prim_m1", "prim_m2_1", "prim_m2_2", "mass_m1", "wronskian", "m2_switch"};
  for (const auto& c : run_verify(default_grid(), o)) {
    const double tol = c.name == "m2_switch" ? 1e-9 : 1e-8;
    l << " " << c.name << "=" << c.measured;
    l.require(c.measured <= tol, c.name);
  }
  return l;
}

SweepCase run_sweep(double alpha) {
  SweepCase sc;
  sc.alpha = alpha;
  const auto g = default_grid();
  const auto t0 = Clock::now();
  for (double eps : kSweep) sc.sols.push_back(solve_profile(power_kernel(eps, alpha), {}, exponential_profile(g)));
  sc.seconds = seconds_since(t0);
  return sc;
}

Line c7(const std::vector<SweepCase>& cases) {
  Line l;
  double total = 0.0;
  for (const auto& sc : cases) {
    const auto w = weight_for(sc.alpha);
    std::vector<double> d, d0, k;
    bool converged = true;
    for (const auto& s : sc.sols) {
      const auto e = exponential_profile(s.profile.grid_ptr());
      converged = converged && s.converged;
      d.push_back(weighted_distance(s.profile, e, w));
      d0.push_back(weighted_distance(s.profile, e, {0.0, w.b}));
      k.push_back(std::abs(kappa_of(s.profile)));
    }
    bool strict = true, ratios_ok = true, kappa_dec = true;
    l << " alpha=" << sc.alpha << ": ratios";
    for (std::size_t i = 1; i < d.size(); ++i) {
      const double r = d[i] / d[i - 1];
      l << " " << r;
      strict = strict && d[i] < d[i - 1];
      ratios_ok = ratios_ok && r >= 0.3 && r <= 0.7;
      kappa_dec = kappa_dec && k[i] < k[i - 1];
    }
    l << " (X_{0,beta} ratios";
    for (std::size_t i = 1; i < d0.size(); ++i) l << " " << d0[i] / d0[i - 1];
    l << ");";
    const std::string tag = " alpha=" + std::to_string(sc.alpha).substr(0, 4);
    l.require(converged, "all converge" + tag);
    l.require(strict, "strictly decreasing" + tag);
    l.require(ratios_ok, "ratios in [0.3,0.7]" + tag);
    l.require(kappa_dec, "|kappa| decreasing" + tag);
    total += sc.seconds;
  }
  l << " time=" << total << "s";
  l.require(total <= 120.0, "runtime <= 2 min");
  return l;
}

Line c8(const std::vector<SweepCase>& cases) {
  Line l;
  const auto g = default_grid();
  for (const auto& sc : cases)
    for (std::size_t i = 0; i < kSweep.size(); ++i) {
      const double eps = kSweep[i];
      if (eps > 0.1 || eps < 0.05) continue;
      const auto other = solve_profile(power_kernel(eps, sc.alpha), {}, exponential_profile(g, 2.0, 2.0));
      const double d = weighted_distance(sc.sols[i].profile, other.profile, weight_for(sc.alpha));
      l << " alpha=" << sc.alpha << " eps=" << eps << ": " << d << ";";
      l.require(sc.sols[i].converged && other.converged, "converged");
      l.require(d <= 1e-6, "distance <= 1e-6");
    }
  return l;
}

Line c9(const std::vector<SweepCase>& cases) {
  Line l;
  const auto g = default_grid();
  const double r0 = bl_residual(exponential_profile(g), power_kernel(0.0, 0.5));
  l << " bl(e; eps=0)=" << r0 << ";";
  l.require(r0 <= 1e-5, "bl(e) <= 1e-5");
  for (const auto& sc : cases) {
    const auto it = std::find(kSweep.begin(), kSweep.end(), 0.05);
    const auto& s = sc.sols[static_cast<std::size_t>(it - kSweep.begin())];
    const auto spec = power_kernel(0.05, sc.alpha);
    const double bl = bl_residual(s.profile, spec), ss = selfsim_residual(s.profile, spec);
    l << " alpha=" << sc.alpha << ": bl=" << bl << " selfsim=" << ss << ";";
    l.require(bl <= 1e-3, "bl <= 1e-3");
    l.require(ss <= 1e-3, "selfsim <= 1e-3");
  }
  return l;
}

Line c10() {
  Line l;
  const auto g = default_grid();
  const auto wa = props::weight_algebra(*g, 1);
  l << " weights: add=" << wa.additivity << " shift=" << wa.shift << " mono=" << wa.monotonicity
    << " reg=" << wa.regularising << ";";
  l.require(wa.additivity <= 1e-12 && wa.shift <= 1e-12, "weight identities");
  l.require(wa.monotonicity <= 1e-12 && wa.regularising <= 1e-12, "weight inequalities");
  const auto ni = props::norm_inequalities(g, 2);
  l << " norms: embed=" << ni.embedding << " reg=" << ni.regularising << ";";
  l.require(ni.embedding <= 1e-12 && ni.regularising <= 1e-12, "norm inequalities");
  const auto bl = props::bilinearity(g, power_kernel(0.1, 0.5), 3);
  l << " bilinear: " << bl.b2 << " " << bl.bw << ";";
  l.require(bl.b2 <= 1e-8 && bl.bw <= 1e-8, "bilinearity");
  const double fu = props::fubini_defect(g);
  l << " fubini=" << fu << ";";
  l.require(fu <= 1e-6, "fubini <= 1e-6");
  const auto coarse = make_grid(1e-5, 40.0, 512);
  const std::pair<props::Operator, const char*> ops[] = {{props::Operator::b2, "B2"},
                                                         {props::Operator::bw, "BW"},
                                                         {props::Operator::linearized, "L"},
                                                         {props::Operator::inverse, "A0"}};
  for (const auto& [op, name] : ops) {
    const auto c = props::continuity(g, op, 0.5, 4);
    const auto cc = props::continuity(coarse, op, 0.5, 4);
    l << " " << name << " max/median=" << c.max << "/" << c.median << ";";
    l.require(c.finite && c.max <= 10.0 * c.median, std::string(name) + " bounded");
    l.require(std::abs(cc.max / c.max - 1.0) <= 0.05, std::string(name) + " grid-stable");
  }
  for (double a : {0.25, 0.5, 0.75}) {
    const double t = props::three_form_gap(g, a);
    l << " three-form(alpha=" << a << ")=" << t << ";";
    l.require(t <= 1e-6, "three forms <= 1e-6");
  }
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--known-failure") == 0 && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--known-failure N]...\n", argv[0]);
      return 2;
    }
  }

  std::set<int> failed;
  const auto report = [&](int id, const char* title, const Line& l) {
    std::printf("[%s] criterion %d: %s:%s\n", l.pass ? "PASS" : "FAIL", id, title, l.detail.str().c_str());
    std::fflush(stdout);
    if (!l.pass) failed.insert(id);
  };

  report(1, "zero-perturbation fixed point", c1());
  report(2, "kernel identity", c2());
  report(3, "explicit inverse", c3());
  report(4, "zero-moment construction", c4());
  report(5, "Laplace kernel ODE", c5());
  report(6, "special-function identities", c6());
  const std::vector<SweepCase> cases = {run_sweep(0.25), run_sweep(0.75)};
  report(7, "stability sweep", c7(cases));
  report(8, "uniqueness", c8(cases));
  report(9, "boundary-layer consistency", c9(cases));
  report(10, "property suites", c10());

  std::printf("%zu of 10 criteria passed\n", 10 - failed.size());
  if (failed != known) {
    if (!known.empty()) std::printf("failing set differs from the expected known failures\n");
    return 1;
  }
  return 0;
}
