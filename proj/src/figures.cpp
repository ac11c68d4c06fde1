#include "voe/figures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voe/errors.hpp"
#include "voe/io.hpp"

namespace voe {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& o) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  o << "<g stroke=\"black\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
    << "\" y2=\"" << kHeight - kBottom << "\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kHeight - kBottom << "\"/>\n</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << kHeight - kBottom + 15
      << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    o << "<text x=\"" << kLeft - 5 << "\" y=\"" << num(f.py(yv) + 4)
      << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kTop / 2 + 4
    << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
    << escape(xl) << "</text>\n";
  o << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << kHeight / 2 << ")\">" << escape(yl) << "</text>\n</g>\n";
}

}  // namespace

Histogram make_histogram(std::span<const double> values, int bins) {
  if (values.empty()) throw ValidationError("make_histogram: no values");
  if (bins < 0) throw ValidationError("make_histogram: bins must be >= 0");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double lo = v.front();
  double hi = v.back();
  if (bins == 0) {
    const double q1 = sorted_quantile(v, 0.25);
    const double q3 = sorted_quantile(v, 0.75);
    const double width = 2.0 * (q3 - q1) * std::cbrt(1.0 / static_cast<double>(v.size()));
    bins = width > 0.0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 1;
    bins = std::clamp(bins, 1, 1000);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  h.edges.push_back(hi);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * bins);
    if (b >= h.counts.size()) b = h.counts.size() - 1;
    ++h.counts[b];
  }
  return h;
}

std::string histogram_svg(const Histogram& h, const std::string& title, const std::string& x_label) {
  std::ostringstream o;
  open_svg(o);
  o << "<!-- data: bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    o << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ',' << h.counts[b]
      << '\n';
  o << "-->\n";
  const std::size_t peak = *std::max_element(h.counts.begin(), h.counts.end());
  const Frame f{h.edges.front(), h.edges.back(), 0.0, static_cast<double>(std::max<std::size_t>(peak, 1))};
  o << "<g fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\">\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double x = f.px(h.edges[b]);
    const double w = f.px(h.edges[b + 1]) - x;
    const double y = f.py(static_cast<double>(h.counts[b]));
    o << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
      << "\" height=\"" << num(f.py(0.0) - y) << "\"/>\n";
  }
  o << "</g>\n";
  axes(o, f, title, x_label, "count");
  o << "</svg>\n";
  return o.str();
}

std::string curve_svg(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<std::optional<Interval>>& band, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
  if (x.empty() || x.size() != y.size() || (!band.empty() && band.size() != x.size()))
    throw ValidationError("curve_svg: mismatched series");
  const bool has_band =
      std::all_of(band.begin(), band.end(), [](const auto& b) { return b.has_value(); }) &&
      !band.empty() && x.size() > 1;

  double ylo = *std::min_element(y.begin(), y.end());
  double yhi = *std::max_element(y.begin(), y.end());
  if (has_band)
    for (const auto& b : band) {
      ylo = std::min(ylo, b->lo);
      yhi = std::max(yhi, b->hi);
    }
  const double pad = yhi > ylo ? 0.05 * (yhi - ylo) : 0.05 * std::max(1e-3, std::abs(yhi));
  double x0 = x.front(), x1 = x.back();
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  const Frame f{x0, x1, ylo - pad, yhi + pad};

  std::ostringstream o;
  open_svg(o);
  o << "<!-- data: x,y,lo,hi\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    o << format_double(x[i]) << ',' << format_double(y[i]);
    if (!band.empty() && band[i])
      o << ',' << format_double(band[i]->lo) << ',' << format_double(band[i]->hi);
    else
      o << ",,";
    o << '\n';
  }
  o << "-->\n";
  if (has_band) {
    o << "<polygon class=\"band\" fill=\"#9ecae1\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) o << num(f.px(x[i])) << ',' << num(f.py(band[i]->hi)) << ' ';
    for (std::size_t i = x.size(); i-- > 0;) o << num(f.px(x[i])) << ',' << num(f.py(band[i]->lo)) << ' ';
    o << "\"/>\n";
  }
  if (x.size() > 1) {
    o << "<polyline class=\"curve\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) o << num(f.px(x[i])) << ',' << num(f.py(y[i])) << ' ';
    o << "\"/>\n";
  } else {
    o << "<circle class=\"curve\" cx=\"" << num(f.px(x[0])) << "\" cy=\"" << num(f.py(y[0]))
      << "\" r=\"4\" fill=\"#08519c\"/>\n";
  }
  axes(o, f, title, x_label, y_label);
  o << "</svg>\n";
  return o.str();
}

}  // namespace voe
