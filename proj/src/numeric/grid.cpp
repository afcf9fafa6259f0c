#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <mutex>
#include <thread>

#include "pbs/numeric.hpp"

namespace pbs::num {

double GridAxis::at(std::size_t i) const {
  if (count <= 1) return start;
  if (i + 1 == count) return stop;
  return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
}

GridSpec::GridSpec(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw Error(ErrorCode::InvalidArgument, "grid needs at least one axis");
  for (const auto& a : axes_)
    if (a.count < 1) throw Error(ErrorCode::InvalidArgument, "grid axis '" + a.name + "' needs count >= 1");
}

namespace {

double parse_double(std::string_view s, std::string_view what) {
  std::string text(s);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw Error(ErrorCode::Parse, "grid: bad " + std::string(what) + " '" + text + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

GridSpec GridSpec::parse(std::string_view text) {
  std::vector<GridAxis> axes;
  for (auto item : split(text, ',')) {
    auto fields = split(trim(item), ':');
    if (fields.size() != 4) throw Error(ErrorCode::Parse, "grid: expected name:start:stop:count, got '" + std::string(item) + "'");
    GridAxis axis;
    axis.name = std::string(trim(fields[0]));
    if (axis.name.empty()) throw Error(ErrorCode::Parse, "grid: empty axis name");
    axis.start = parse_double(trim(fields[1]), "start");
    axis.stop = parse_double(trim(fields[2]), "stop");
    const auto count_text = trim(fields[3]);
    long long count = 0;
    auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count < 1)
      throw Error(ErrorCode::Parse, "grid: count must be a positive integer, got '" + std::string(count_text) + "'");
    axis.count = static_cast<std::size_t>(count);
    axes.push_back(std::move(axis));
  }
  return GridSpec(std::move(axes));
}

std::string GridSpec::to_string() const {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (i) out << ',';
    out << axes_[i].name << ':' << axes_[i].start << ':' << axes_[i].stop << ':' << axes_[i].count;
  }
  return out.str();
}

std::size_t GridSpec::size() const noexcept {
  std::size_t n = axes_.empty() ? 0 : 1;
  for (const auto& a : axes_) n *= a.count;
  return n;
}

std::vector<double> GridSpec::point(std::size_t flat_index) const {
  std::vector<double> p(axes_.size());
  for (std::size_t k = axes_.size(); k-- > 0;) {
    p[k] = axes_[k].at(flat_index % axes_[k].count);
    flat_index /= axes_[k].count;
  }
  return p;
}

std::vector<std::string> GridSpec::names() const {
  std::vector<std::string> out;
  for (const auto& a : axes_) out.push_back(a.name);
  return out;
}

std::size_t GridField::masked_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](const auto& m) { return m.has_value(); }));
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

GridField sample_grid(const PointFn& f, const GridSpec& spec, unsigned threads) {
  GridField field;
  field.spec = spec;
  const std::size_t n = spec.size();
  field.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  field.mask.assign(n, std::nullopt);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto p = spec.point(i);
    try {
      const double v = f(p);
      if (std::isfinite(v)) field.values[i] = v;
      else field.mask[i] = ErrorCode::NonFinite;
    } catch (const Error& e) {
      field.mask[i] = e.code();
    }
  });
  return field;
}

}  // namespace pbs::num
