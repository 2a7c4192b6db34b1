#include "robustcf/csv_svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "robustcf/errors.hpp"

namespace robustcf {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string status_token(CriterionCase c, bool envelope) {
  std::string s = to_string(c);
  if (envelope) s += "+env";
  return s;
}

}  // namespace

std::string curve_csv(const BoundsCurve& curve,
                      const std::vector<std::pair<double, double>>& extrap) {
  std::ostringstream os;
  int k = curve.rows.empty() ? 0 : static_cast<int>(curve.rows.front().theta_lower.size());
  os << "delta,kappa_lower,kappa_upper";
  for (int i = 1; i <= k; ++i) os << ",theta_lower_" << i;
  for (int i = 1; i <= k; ++i) os << ",theta_upper_" << i;
  os << ",status_lower,status_upper,inner_iters_lower,inner_iters_upper"
     << ",extrap_lower,extrap_upper\n";
  for (size_t r = 0; r < curve.rows.size(); ++r) {
    const BoundsRow& row = curve.rows[r];
    os << fmt(row.delta) << ',' << fmt(row.kappa_lower) << ',' << fmt(row.kappa_upper);
    for (int i = 0; i < k; ++i) os << ',' << fmt(row.theta_lower[i]);
    for (int i = 0; i < k; ++i) os << ',' << fmt(row.theta_upper[i]);
    os << ',' << status_token(row.case_lower, row.envelope_lower) << ','
       << status_token(row.case_upper, row.envelope_upper) << ',' << row.inner_iters_lower
       << ',' << row.inner_iters_upper;
    if (r < extrap.size())
      os << ',' << fmt(extrap[r].first) << ',' << fmt(extrap[r].second);
    else
      os << ",,";
    os << '\n';
  }
  return os.str();
}

std::string curve_svg(const BoundsCurve& curve,
                      const std::vector<std::pair<double, double>>& extrap, double kappa_hat,
                      double pre_line, const std::string& title) {
  const double W = 800, H = 600, ml = 70, mr = 30, mt = 40, mb = 50;
  double xmin = 0.0, xmax = 1.0, ymin = 1e300, ymax = -1e300;
  if (!curve.rows.empty()) {
    xmin = curve.rows.front().delta;
    xmax = curve.rows.back().delta;
  }
  auto widen = [&](double v) {
    if (!std::isfinite(v)) return;
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  };
  for (const auto& r : curve.rows) {
    widen(r.kappa_lower);
    widen(r.kappa_upper);
  }
  for (const auto& e : extrap) {
    widen(e.first);
    widen(e.second);
  }
  widen(kappa_hat);
  widen(pre_line);
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  double pad = 0.05 * std::max(1e-12, ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return ml + (x - xmin) / std::max(1e-300, xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  auto polyline = [&](const std::vector<std::pair<double, double>>& xy, const char* style) {
    std::ostringstream p;
    p << "<polyline fill=\"none\" " << style << " points=\"";
    for (const auto& [x, y] : xy)
      if (std::isfinite(y)) p << px(x) << ',' << py(y) << ' ';
    p << "\"/>\n";
    return p.str();
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
     << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double x = xmin + i * (xmax - xmin) / 5;
    double y = ymin + i * (ymax - ymin) / 5;
    os << "<text x=\"" << px(x) << "\" y=\"" << H - mb + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(std::round(x * 1e4) / 1e4)
       << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(std::round(y * 1e4) / 1e4)
       << "</text>\n";
  }
  os << "<text x=\"" << (W / 2) << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">neighborhood size</text>\n";

  std::vector<std::pair<double, double>> lo, hi, exlo, exhi, base, pre;
  for (size_t i = 0; i < curve.rows.size(); ++i) {
    lo.emplace_back(curve.rows[i].delta, curve.rows[i].kappa_lower);
    hi.emplace_back(curve.rows[i].delta, curve.rows[i].kappa_upper);
    if (i < extrap.size()) {
      exlo.emplace_back(curve.rows[i].delta, extrap[i].first);
      exhi.emplace_back(curve.rows[i].delta, extrap[i].second);
    }
    base.emplace_back(curve.rows[i].delta, kappa_hat);
    pre.emplace_back(curve.rows[i].delta, pre_line);
  }
  os << polyline(lo, "stroke=\"#1f4e9c\" stroke-width=\"2\"");
  os << polyline(hi, "stroke=\"#1f4e9c\" stroke-width=\"2\"");
  os << polyline(base, "stroke=\"#444444\" stroke-width=\"1.5\" stroke-dasharray=\"8,5\"");
  os << polyline(pre, "stroke=\"#444444\" stroke-width=\"1.5\" stroke-dasharray=\"2,4\"");
  os << polyline(exlo, "stroke=\"#b03030\" stroke-width=\"1.5\" stroke-dasharray=\"8,3,2,3\"");
  os << polyline(exhi, "stroke=\"#b03030\" stroke-width=\"1.5\" stroke-dasharray=\"8,3,2,3\"");
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write file: " + path);
  out << content;
}

}  // namespace robustcf
