#include "anchorpose/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include "anchorpose/text.hpp"

namespace anchorpose {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

namespace {

void write_metric_columns(std::ostream& out, const MetricReport& m) {
  out << m.n;
  for (double v : {m.yaw_mae_deg, m.pitch_mae_deg, m.roll_mae_deg, m.mae_deg, m.geodesic_mae_deg}) {
    out << ',' << format_number(v);
  }
  if (m.translation) {
    const TranslationMetrics& t = *m.translation;
    for (double v : {t.x_mae_mm, t.y_mae_mm, t.z_mae_mm, t.l2_mean_mm}) out << ',' << format_number(v);
  } else {
    out << ",,,,";
  }
  out << '\n';
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::string_view benchmark, const NamedMetrics& metrics) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& [id, m] : metrics) {
    out << benchmark << ',' << id << ',';
    write_metric_columns(out, m);
  }
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << kSweepCsvHeader << '\n';
  for (const SweepBin& bin : report.bins) {
    for (std::size_t e = 0; e < report.estimator_ids.size(); ++e) {
      out << to_string(report.axis) << ',' << format_number(bin.lo_deg) << ',' << format_number(bin.hi_deg) << ','
          << report.estimator_ids[e] << ',';
      write_metric_columns(out, bin.per_estimator[e]);
    }
  }
}

void write_loss_csv(std::ostream& out, const LossBreakdown<double>& loss) {
  out << kLossCsvHeader << '\n';
  for (const auto& s : loss.stages) {
    out << s.stage_index;
    for (double v : {s.weight, s.translation, s.rotation, s.fov, s.weighted_translation, s.weighted_rotation,
                     s.weighted_fov, s.contribution}) {
      out << ',' << format_number(v);
    }
    out << '\n';
  }
  out << "total,,,,";
  for (double v : {loss.translation_total, loss.rotation_total, loss.fov_total, loss.total}) {
    out << ',' << format_number(v);
  }
  out << '\n';
}

nlohmann::json to_json(const MetricReport& m) {
  nlohmann::json j = {{"n", m.n},
                      {"yaw_mae_deg", m.yaw_mae_deg},
                      {"pitch_mae_deg", m.pitch_mae_deg},
                      {"roll_mae_deg", m.roll_mae_deg},
                      {"mae_deg", m.mae_deg},
                      {"geodesic_mae_deg", m.geodesic_mae_deg}};
  if (m.translation) {
    j["translation"] = {{"x_mae_mm", m.translation->x_mae_mm},
                        {"y_mae_mm", m.translation->y_mae_mm},
                        {"z_mae_mm", m.translation->z_mae_mm},
                        {"l2_mean_mm", m.translation->l2_mean_mm}};
  } else {
    j["translation"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const PairStats& s) {
  return {{"count", s.count}, {"gap_mean_deg", s.gap_mean_deg}, {"gap_max_deg", s.gap_max_deg}};
}

nlohmann::json to_json(const SweepReport& r) {
  nlohmann::json bins = nlohmann::json::array();
  for (const SweepBin& bin : r.bins) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t e = 0; e < r.estimator_ids.size(); ++e) per[r.estimator_ids[e]] = to_json(bin.per_estimator[e]);
    bins.push_back({{"lo_deg", bin.lo_deg}, {"hi_deg", bin.hi_deg}, {"pair_count", bin.pair_count}, {"metrics", per}});
  }
  return {{"axis", to_string(r.axis)},   {"bin_width_deg", r.bin_width_deg}, {"estimators", r.estimator_ids},
          {"paired", r.paired},          {"unpaired", r.unpaired},           {"bins", bins}};
}

nlohmann::json to_json(const LossBreakdown<double>& loss) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : loss.stages) {
    stages.push_back({{"stage", s.stage_index},
                      {"weight", s.weight},
                      {"translation", s.translation},
                      {"rotation", s.rotation},
                      {"fov", s.fov},
                      {"weighted_translation", s.weighted_translation},
                      {"weighted_rotation", s.weighted_rotation},
                      {"weighted_fov", s.weighted_fov},
                      {"contribution", s.contribution}});
  }
  return {{"mode", to_string(loss.mode)},
          {"total", loss.total},
          {"translation_total", loss.translation_total},
          {"rotation_total", loss.rotation_total},
          {"fov_total", loss.fov_total},
          {"stages", stages}};
}

nlohmann::json to_json(const NamedMetrics& metrics) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [id, m] : metrics) {
    nlohmann::json entry = to_json(m);
    entry["estimator"] = id;
    j.push_back(std::move(entry));
  }
  return j;
}

nlohmann::json make_envelope(const ReportContext& context, nlohmann::json stats, nlohmann::json results) {
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : context.config) config[k] = v;
  nlohmann::json inputs = nlohmann::json::array();
  for (const InputDigest& d : context.inputs) inputs.push_back({{"path", d.path}, {"sha256", d.sha256}});
  return {{"format_version", kReportFormatVersion},
          {"command", context.command},
          {"seed", context.seed},
          {"config", config},
          {"inputs", inputs},
          {"stats", std::move(stats)},
          {"results", std::move(results)}};
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string px(double v) { return format_fixed(v, 2); }

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_sweep_svg(const SweepReport& report, const SvgOptions& options) {
  const double w = options.width;
  const double h = options.height;
  const double left = 60.0, right = 20.0, top = 30.0, bottom = 40.0, gap = 20.0;
  const double band_h = 0.22 * (h - top - bottom);
  const double plot_h = h - top - bottom - band_h - gap;
  const double plot_bottom = top + plot_h;
  const double band_top = plot_bottom + gap;
  const double band_bottom = band_top + band_h;
  const std::size_t nbins = report.bins.size();
  const double slot = nbins > 0 ? (w - left - right) / static_cast<double>(nbins) : 0.0;

  double max_mae = 0.0;
  std::size_t max_count = 0;
  for (const SweepBin& bin : report.bins) {
    max_count = std::max(max_count, bin.pair_count);
    if (bin.pair_count == 0) continue;
    for (const MetricReport& m : bin.per_estimator) max_mae = std::max(max_mae, m.mae_deg);
  }
  const double y_max = max_mae > 0.0 ? max_mae * 1.1 : 1.0;
  auto x_of = [&](std::size_t b) { return left + slot * (static_cast<double>(b) + 0.5); };
  auto y_of = [&](double mae) { return plot_bottom - plot_h * mae / y_max; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
    << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\" data-axis=\"" << to_string(report.axis)
    << "\" data-bin-width=\"" << format_number(report.bin_width_deg) << "\" data-y-max=\"" << format_number(y_max)
    << "\">\n";
  s << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
    << "\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    s << "<text class=\"title\" x=\"" << px(w / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(options.title) << "</text>\n";
  }
  s << "<line class=\"axis\" x1=\"" << px(left) << "\" y1=\"" << px(plot_bottom) << "\" x2=\"" << px(w - right)
    << "\" y2=\"" << px(plot_bottom) << "\" stroke=\"black\"/>\n";
  s << "<line class=\"axis\" x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
    << px(plot_bottom) << "\" stroke=\"black\"/>\n";
  s << "<text class=\"y-label\" x=\"14\" y=\"" << px(top + plot_h / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 "
    << px(top + plot_h / 2) << ")\" text-anchor=\"middle\">MAE (deg)</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max * i / 4.0;
    s << "<text class=\"y-tick\" x=\"" << px(left - 6) << "\" y=\"" << px(y_of(v) + 4)
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_fixed(v, 2) << "</text>\n";
  }

  for (std::size_t e = 0; e < report.estimator_ids.size(); ++e) {
    const char* color = kPalette[e % kPalette.size()];
    const std::string id = xml_escape(report.estimator_ids[e]);
    s << "<g class=\"estimator\" data-estimator=\"" << id << "\">\n";
    std::vector<std::string> run;
    auto flush = [&] {
      if (!run.empty()) {
        s << "<polyline class=\"series\" data-estimator=\"" << id << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < run.size(); ++i) s << (i ? " " : "") << run[i];
        s << "\"/>\n";
        run.clear();
      }
    };
    for (std::size_t b = 0; b < nbins; ++b) {
      const SweepBin& bin = report.bins[b];
      if (bin.pair_count == 0) {
        flush();
        continue;
      }
      run.push_back(px(x_of(b)) + "," + px(y_of(bin.per_estimator[e].mae_deg)));
    }
    flush();
    for (std::size_t b = 0; b < nbins; ++b) {
      const SweepBin& bin = report.bins[b];
      if (bin.pair_count == 0) continue;
      const double mae = bin.per_estimator[e].mae_deg;
      s << "<circle class=\"point\" data-estimator=\"" << id << "\" data-bin=\"" << b << "\" data-mae=\""
        << format_number(mae) << "\" cx=\"" << px(x_of(b)) << "\" cy=\"" << px(y_of(mae)) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    }
    s << "<text class=\"legend\" x=\"" << px(w - right - 150) << "\" y=\"" << px(top + 14 + 16.0 * e)
      << "\" font-size=\"12\" fill=\"" << color << "\">" << id << "</text>\n";
    s << "</g>\n";
  }

  s << "<g class=\"count-band\">\n";
  for (std::size_t b = 0; b < nbins; ++b) {
    const SweepBin& bin = report.bins[b];
    const double bh = max_count > 0 ? band_h * static_cast<double>(bin.pair_count) / static_cast<double>(max_count)
                                    : 0.0;
    s << "<rect class=\"count\" data-bin=\"" << b << "\" data-count=\"" << bin.pair_count << "\" x=\""
      << px(left + slot * b + 1) << "\" y=\"" << px(band_bottom - bh) << "\" width=\"" << px(std::max(0.0, slot - 2))
      << "\" height=\"" << px(bh) << "\" fill=\"#999999\"/>\n";
  }
  s << "</g>\n";
  for (std::size_t b = 0; b <= nbins; ++b) {
    if (nbins > 12 && b % 2 != 0 && b != nbins) continue;
    const double lo = static_cast<double>(b) * report.bin_width_deg;
    s << "<text class=\"x-tick\" x=\"" << px(left + slot * b) << "\" y=\"" << px(band_bottom + 14)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << format_number(lo) << "</text>\n";
  }
  s << "<text class=\"x-label\" x=\"" << px(left + (w - left - right) / 2) << "\" y=\"" << px(h - 6)
    << "\" font-size=\"12\" text-anchor=\"middle\">"
    << (report.axis == SweepAxis::kAnchorQueryGap ? "anchor-query gap (deg)" : "query distance to neutral (deg)")
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace anchorpose
