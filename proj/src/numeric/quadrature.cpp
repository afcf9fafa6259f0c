#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "pbs/numeric.hpp"

namespace pbs::num {

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// 7-point Gauss weights on kXgk[1], kXgk[3], kXgk[5], kXgk[7].
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::array<double, 5> kGl10X = {0.148874338981631210884826001129720, 0.433395394129247190799265943165784,
                                          0.679409568299024406234327365114874, 0.865063366688984510732096688423493,
                                          0.973906528517171720077964012084452};
constexpr std::array<double, 5> kGl10W = {0.295524224714752870173892994651338, 0.269266719309996355091226921569469,
                                          0.219086362515982043995534934228163, 0.149451349150580593145776339657697,
                                          0.066671344308688137593568809893332};

struct Segment {
  double a, b;
  double value;
  double error;
  double abs_value;
  int depth;
  bool operator<(const Segment& o) const { return error < o.error; }
};

double safe_eval(const ScalarFn& f, double x, bool& bad) {
  try {
    const double v = f(x);
    if (!std::isfinite(v)) bad = true;
    return std::isfinite(v) ? v : 0.0;
  } catch (const Error&) {
    bad = true;
    return 0.0;
  }
}

Segment kronrod(const ScalarFn& f, double a, double b, int depth) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  bool bad = false;
  const double fc = safe_eval(f, c, bad);
  double k = kWgk[7] * fc;
  double g = kWg[3] * fc;
  double kabs = kWgk[7] * std::fabs(fc);
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = safe_eval(f, c - dx, bad);
    const double f2 = safe_eval(f, c + dx, bad);
    k += kWgk[j] * (f1 + f2);
    kabs += kWgk[j] * (std::fabs(f1) + std::fabs(f2));
    if (j % 2 == 1) g += kWg[j / 2] * (f1 + f2);
  }
  Segment s{a, b, k * h, std::fabs((k - g) * h), kabs * std::fabs(h), depth};
  if (bad) s.error = std::numeric_limits<double>::infinity();
  return s;
}

QuadratureResult integrate_plain(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg) {
  if (!(cfg.relative_tolerance > 0)) throw Error(ErrorCode::InvalidArgument, "quadrature tolerance must be > 0");
  QuadratureResult out;
  if (a == b) return out;

  std::priority_queue<Segment> heap;
  heap.push(kronrod(f, a, b, 0));
  out.evaluations = 15;
  constexpr int kMaxSegments = 20000;
  for (;;) {
    double value = 0, error = 0, abs_value = 0;
    {
      auto copy = heap;
      while (!copy.empty()) {
        value += copy.top().value;
        error += copy.top().error;
        abs_value += copy.top().abs_value;
        copy.pop();
      }
    }
    const double target =
        std::max(cfg.relative_tolerance * std::fabs(value), 50 * std::numeric_limits<double>::epsilon() * abs_value);
    if (error <= target) {
      out.value = value;
      out.error_estimate = error;
      return out;
    }
    Segment worst = heap.top();
    if (worst.depth >= cfg.max_depth || static_cast<int>(heap.size()) >= kMaxSegments) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "quadrature depth exhausted; worst interval [" << worst.a << ", " << worst.b << "]";
      throw QuadratureError(worst.a, worst.b, msg.str());
    }
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    heap.push(kronrod(f, worst.a, mid, worst.depth + 1));
    heap.push(kronrod(f, mid, worst.b, worst.depth + 1));
    out.evaluations += 30;
  }
}

}  // namespace

QuadratureResult integrate(const ScalarFn& f, double a, double b, const QuadratureConfig& cfg) {
  try {
    return integrate_plain(f, a, b, cfg);
  } catch (const QuadratureError& e) {
    if (e.lo() != a && e.hi() != b && e.lo() != b && e.hi() != a) throw;
  }
  // Stuck at an endpoint: substitute x = a + (b - a)(3s^2 - 2s^3), whose
  // vanishing derivative at both ends absorbs integrable endpoint blow-ups.
  const double w = b - a;
  auto mapped = [&](double s) {
    const double ds = 6 * s * (1 - s);
    if (ds == 0) return 0.0;
    return f(a + w * s * s * (3 - 2 * s)) * w * ds;
  };
  try {
    return integrate_plain(mapped, 0, 1, cfg);
  } catch (const QuadratureError& e) {
    auto x = [&](double s) { return a + w * s * s * (3 - 2 * s); };
    std::ostringstream msg;
    msg.precision(17);
    msg << "quadrature depth exhausted; worst interval [" << x(e.lo()) << ", " << x(e.hi()) << "]";
    throw QuadratureError(x(e.lo()), x(e.hi()), msg.str());
  }
}

std::vector<std::pair<double, double>> gauss_legendre_nodes(double a, double b, int panels) {
  if (panels < 1) throw Error(ErrorCode::InvalidArgument, "gauss_legendre: panels must be >= 1");
  std::vector<std::pair<double, double>> nodes;
  nodes.reserve(static_cast<std::size_t>(panels) * 10);
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double c = lo + 0.5 * width;
    const double h = 0.5 * width;
    for (std::size_t j = 0; j < kGl10X.size(); ++j) {
      nodes.emplace_back(c - h * kGl10X[j], h * kGl10W[j]);
      nodes.emplace_back(c + h * kGl10X[j], h * kGl10W[j]);
    }
  }
  return nodes;
}

double gauss_legendre(const ScalarFn& f, double a, double b, int panels) {
  double sum = 0;
  for (const auto& [x, w] : gauss_legendre_nodes(a, b, panels)) sum += w * f(x);
  return sum;
}

double central_fd(const ScalarFn& f, double at, int order, double h) {
  if (order != 1 && order != 2) throw Error(ErrorCode::InvalidArgument, "central_fd: order must be 1 or 2");
  if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "central_fd: step must be > 0");
  auto eval = [&](double x) {
    double v = 0;
    try {
      v = f(x);
    } catch (const Error& e) {
      throw Error(ErrorCode::DomainExit, std::string("finite difference left the domain: ") + e.what());
    }
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainExit, "finite difference produced a non-finite value");
    return v;
  };
  const double fp = eval(at + h);
  const double fm = eval(at - h);
  if (order == 1) return (fp - fm) / (2 * h);
  return (fp - 2 * eval(at) + fm) / (h * h);
}

double central_fd5(const ScalarFn& f, double at, double h) {
  if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "central_fd5: step must be > 0");
  auto eval = [&](double x) {
    double v = 0;
    try {
      v = f(x);
    } catch (const Error& e) {
      throw Error(ErrorCode::DomainExit, std::string("finite difference left the domain: ") + e.what());
    }
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainExit, "finite difference produced a non-finite value");
    return v;
  };
  return (eval(at - 2 * h) - 8 * eval(at - h) + 8 * eval(at + h) - eval(at + 2 * h)) / (12 * h);
}

}  // namespace pbs::num
