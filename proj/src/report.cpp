#include "dflm/report.hpp"

#include "dflm/config_io.hpp"
#include "dflm/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dflm {

using nlohmann::json;

void write_history_csv(std::ostream& os, const RunRecord& rec) {
  os << "k,fevals,f,grad_model_norm,theta,lambda,rho,step_norm,accepted,p\n";
  for (const auto& it : rec.history) {
    os << it.k << ',' << it.fevals << ',' << g17(it.f) << ',' << g17(it.grad_model_norm) << ','
       << g17(it.theta) << ',' << g17(it.lambda) << ',' << g17(it.rho) << ','
       << g17(it.step_norm) << ',' << (it.accepted ? 1 : 0) << ',' << it.p << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) {
    if (a->solver_id != b->solver_id) return a->solver_id < b->solver_id;
    if (a->problem_id != b->problem_id) return a->problem_id < b->problem_id;
    return a->seed < b->seed;
  });
  os << "solver,problem,seed,final_f,fevals,stop_reason,wall_time_ms\n";
  for (const auto* r : sorted) {
    os << r->solver_id << ',' << r->problem_id << ',' << r->seed << ',' << g17(r->final_f) << ','
       << r->fevals << ',' << to_string(r->stop) << ',' << g17(r->wall_time_ms) << '\n';
  }
}

void write_profile_csv(std::ostream& os, const PerformanceProfile& prof) {
  os << "alpha";
  for (const auto& id : prof.solver_ids) os << ',' << id;
  os << '\n';
  for (size_t ai = 0; ai < prof.alphas.size(); ++ai) {
    os << g17(prof.alphas[ai]);
    for (size_t si = 0; si < prof.solver_ids.size(); ++si) os << ',' << g17(prof.pi[si][ai]);
    os << '\n';
  }
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void write_profile_svg(std::ostream& os, const PerformanceProfile& prof) {
  const double width = 720, height = 480;
  const double ml = 64, mr = 24, mt = 40, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const double xmax = std::log2(prof.alphas.back());

  auto sx = [&](double log2a) { return ml + (xmax > 0 ? log2a / xmax : 0.0) * pw; };
  auto sy = [&](double piv) { return mt + (1.0 - piv) * ph; };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
     << " font-size=\"16\">Performance profile (tau=" << gshort(prof.tau) << ")</text>\n";

  // axes and grid
  os << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (int i = 0; i <= 5; ++i) {
    double y = sy(i / 5.0);
    os << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
       << fmt_coord(ml + pw) << "\" y2=\"" << fmt_coord(y) << "\"/>\n";
  }
  for (int i = 0; i <= static_cast<int>(std::floor(xmax)); ++i) {
    double x = sx(i);
    os << "<line x1=\"" << fmt_coord(x) << "\" y1=\"" << fmt_coord(mt) << "\" x2=\""
       << fmt_coord(x) << "\" y2=\"" << fmt_coord(mt + ph) << "\"/>\n";
  }
  os << "</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  for (int i = 0; i <= 5; ++i) {
    double v = i / 5.0;
    os << "<text x=\"" << fmt_coord(ml - 8) << "\" y=\"" << fmt_coord(sy(v) + 4)
       << "\" text-anchor=\"end\">" << gshort(v) << "</text>\n";
  }
  for (int i = 0; i <= static_cast<int>(std::floor(xmax)); ++i) {
    os << "<text x=\"" << fmt_coord(sx(i)) << "\" y=\"" << fmt_coord(mt + ph + 18)
       << "\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  os << "<text x=\"" << fmt_coord(ml + pw / 2) << "\" y=\"" << fmt_coord(height - 10)
     << "\" text-anchor=\"middle\">log2(alpha)</text>\n";
  os << "<text x=\"16\" y=\"" << fmt_coord(mt + ph / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << fmt_coord(mt + ph / 2)
     << ")\">pi(alpha)</text>\n";
  os << "</g>\n";

  // step curves, one per solver
  for (size_t si = 0; si < prof.solver_ids.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t ai = 0; ai < prof.alphas.size(); ++ai) {
      double x = sx(std::log2(prof.alphas[ai]));
      double y = sy(prof.pi[si][ai]);
      if (ai > 0) os << fmt_coord(x) << ',' << fmt_coord(sy(prof.pi[si][ai - 1])) << ' ';
      os << fmt_coord(x) << ',' << fmt_coord(y) << ' ';
    }
    os << "\"/>\n";
  }

  // legend, bottom-right
  double lx = ml + pw - 170, ly = mt + ph - 18.0 * static_cast<double>(prof.solver_ids.size()) - 12;
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (size_t si = 0; si < prof.solver_ids.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    double y = ly + 18.0 * static_cast<double>(si);
    os << "<line x1=\"" << fmt_coord(lx) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
       << fmt_coord(lx + 24) << "\" y2=\"" << fmt_coord(y) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt_coord(lx + 30) << "\" y=\"" << fmt_coord(y + 4) << "\">"
       << xml_escape(prof.solver_ids[si]) << "</text>\n";
  }
  os << "</g>\n";
  os << "</svg>\n";
}

void write_records_json(std::ostream& os, const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) {
    if (a->solver_id != b->solver_id) return a->solver_id < b->solver_id;
    if (a->problem_id != b->problem_id) return a->problem_id < b->problem_id;
    return a->seed < b->seed;
  });

  json arr = json::array();
  for (const auto* r : sorted) {
    json trace = json::array();
    for (const auto& tp : r->trace) trace.push_back(json::array({tp.fevals, tp.best_f}));
    // json has no Inf; failed runs carry final_f = +inf and round-trip as null
    json final_f = std::isfinite(r->final_f) ? json(r->final_f) : json(nullptr);
    arr.push_back(json{
        {"solver", r->solver_id},
        {"problem", r->problem_id},
        {"seed", r->seed},
        {"n", r->n},
        {"budget", r->budget},
        {"f0", r->f0},
        {"final_f", final_f},
        {"fevals", r->fevals},
        {"stop_reason", to_string(r->stop)},
        {"stop_detail", r->stop_detail},
        {"wall_time_ms", r->wall_time_ms},
        {"trace", trace},
    });
  }
  os << json{{"records", arr}}.dump(1) << '\n';
}

std::vector<RunRecord> read_records_json(std::istream& is) {
  json doc = json::parse(is);
  std::vector<RunRecord> out;
  for (const auto& jr : doc.at("records")) {
    RunRecord r;
    r.solver_id = jr.at("solver").get<std::string>();
    r.problem_id = jr.at("problem").get<std::string>();
    r.seed = jr.at("seed").get<std::uint64_t>();
    r.n = jr.at("n").get<int>();
    r.budget = jr.at("budget").get<long>();
    r.f0 = jr.at("f0").get<double>();
    r.final_f = jr.at("final_f").is_null() ? std::numeric_limits<double>::infinity()
                                           : jr.at("final_f").get<double>();
    r.fevals = jr.at("fevals").get<long>();
    std::string stop = jr.at("stop_reason").get<std::string>();
    if (stop == "stationary_model_gradient") r.stop = StopReason::StationaryModelGradient;
    else if (stop == "small_step") r.stop = StopReason::SmallStep;
    else if (stop == "small_relative_decrease") r.stop = StopReason::SmallRelativeDecrease;
    else if (stop == "max_fevals") r.stop = StopReason::MaxFevals;
    else r.stop = StopReason::Error;
    r.stop_detail = jr.value("stop_detail", std::string());
    r.wall_time_ms = jr.at("wall_time_ms").get<double>();
    for (const auto& tp : jr.at("trace"))
      r.trace.push_back({tp.at(0).get<long>(), tp.at(1).get<double>()});
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dflm
