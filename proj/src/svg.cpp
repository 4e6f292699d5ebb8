#include "selab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "selab/util.hpp"

namespace selab {

namespace {

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e8b57", "#e09f3e",
                          "#7b2cbf", "#457b9d", "#6a994e", "#bc4749"};

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string SvgChart::render(int width, int height) const {
  const double ml = 62, mr = 16, mt = 34, mb = 46;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const SvgSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double ypad = 0.06 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2.0 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  // axes and ticks
  out << "<g stroke=\"#444\" stroke-width=\"1\">\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\"/>\n</g>\n";
  const int nticks = 5;
  out << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">\n";
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / nticks;
    const double fy = ymin + (ymax - ymin) * i / nticks;
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(fx) << "\" y2=\""
        << mt + ph + 4 << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
        << fmt_tick(fx) << "</text>\n"
        << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\""
        << sy(fy) << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << ml - 7 << "\" y=\"" << sy(fy) + 3 << "\" text-anchor=\"end\">"
        << fmt_tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n"
      << "<text x=\"14\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " << mt + ph / 2
      << ")\">" << y_label << "</text>\n</g>\n";

  // series
  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << fmt_double(sx(s.x[i])) << ',' << fmt_double(sy(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << "<circle cx=\"" << fmt_double(sx(s.x[i])) << "\" cy=\"" << fmt_double(sy(s.y[i]))
          << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
    }
  }

  // legend
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  double ly = mt + 6;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<rect x=\"" << ml + pw - 170 << "\" y=\"" << ly - 8
        << "\" width=\"12\" height=\"3\" fill=\"" << color << "\"/>\n"
        << "<text x=\"" << ml + pw - 152 << "\" y=\"" << ly - 3 << "\">" << series[si].label
        << "</text>\n";
    ly += 15;
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace selab
