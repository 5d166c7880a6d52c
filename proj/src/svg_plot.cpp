#include "qnn/svg_plot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <sstream>

namespace qnn {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string label_of(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed space

  double transform(double v) const { return log ? std::log10(v) : v; }
  double fraction(double v) const { return (transform(v) - lo) / (hi - lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
      out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    return out;
  }
};

Axis make_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    const double t = a.transform(v);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) {
    const double pad = log ? 0.5 : std::max(std::abs(lo) * 0.1, 0.5);
    lo -= pad;
    hi += pad;
  } else {
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
  const double left = 80, right = 150, top = 40, bottom = 60;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;

  std::vector<std::vector<std::pair<double, double>>> kept(series.size());
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < series.size(); ++s)
    for (const auto& [x, y] : series[s].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((opt.log_x && x <= 0) || (opt.log_y && y <= 0)) continue;
      kept[s].emplace_back(x, y);
      xs.push_back(x);
      ys.push_back(y);
    }
  const Axis ax = make_axis(xs, opt.log_x), ay = make_axis(ys, opt.log_y);
  const auto px = [&](double x) { return left + ax.fraction(x) * pw; };
  const auto py = [&](double y) { return top + (1.0 - ay.fraction(y)) * ph; };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
    << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  if (!opt.deterministic) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    o << "<!-- generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " -->\n";
  }
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << opt.width / 2.0 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">" << escape(opt.title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  o << "<g font-family=\"sans-serif\" font-size=\"11\" stroke=\"#ddd\">\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    o << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << top + ph << "\"/>"
      << "<text x=\"" << x << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" stroke=\"none\">"
      << label_of(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    o << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y << "\"/>"
      << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" stroke=\"none\">"
      << label_of(t) << "</text>\n";
  }
  o << "</g>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 18
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << escape(opt.x_label)
    << (opt.log_x ? " (log)" : "") << "</text>\n";
  o << "<text transform=\"translate(20," << top + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << escape(opt.y_label) << (opt.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    auto pts = kept[s];
    o << "<g class=\"series\" fill=\"" << color << "\" stroke=\"" << color << "\">\n";
    if (series[s].connect && pts.size() > 1) {
      std::sort(pts.begin(), pts.end());
      o << "<polyline fill=\"none\" points=\"";
      for (const auto& [x, y] : pts) o << px(x) << ',' << py(y) << ' ';
      o << "\"/>\n";
    }
    for (const auto& [x, y] : pts)
      o << "<circle class=\"marker\" cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\"/>\n";
    o << "</g>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    o << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/><text x=\"" << left + pw + 28 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace qnn
