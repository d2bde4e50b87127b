#include "ratingcbc/report.hpp"

#include <fmt/format.h>

namespace ratingcbc {

namespace {

std::string estimate_cell(const MnlFit& fit, std::size_t attribute, std::size_t level) {
  if (fit.estimates.reference_levels.at(attribute) == level) return "-";
  for (std::size_t k = 0; k < fit.estimates.labels.size(); ++k) {
    const auto& lab = fit.estimates.labels[k];
    if (lab.attribute == attribute && lab.level == level)
      return format_estimate(fit.estimates.beta[k], fit.std_errors[k], fit.p_values[k]);
  }
  return "";
}

// non-reference levels first, like the published tables
std::vector<std::size_t> level_order(const Attribute& a, std::size_t reference) {
  std::vector<std::size_t> order;
  for (std::size_t l = 0; l < a.level_count(); ++l)
    if (l != reference) order.push_back(l);
  order.push_back(reference);
  return order;
}

} // namespace

std::string format_estimate(double beta, double se, double p_value) {
  const auto stars = significance_stars(p_value);
  auto text = fmt::format("{:.2f} ({:.2f})", beta, se);
  if (!stars.empty()) text += fmt::format(" {}", stars);
  return text;
}

std::string render_fit_table(const Design& design, const MnlFit& fit) {
  std::string out = fmt::format("{:<12}{:<16}{}\n", "Attribute", "Level", "Estimate (beta)");
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    const auto& attr = design.attributes[a];
    bool first = true;
    for (auto l : level_order(attr, fit.estimates.reference_levels.at(a))) {
      out += fmt::format("{:<12}{:<16}{}\n", first ? attr.name : "", attr.level_label(l), estimate_cell(fit, a, l));
      first = false;
    }
  }
  out += fmt::format("Log-Likelihood: {:.1f}\n", fit.log_likelihood);
  out += fmt::format("McFadden R2: {:.2f}\n", fit.mcfadden_r2);
  out += fmt::format("Likelihood ratio test: X2={:.1f} {}\n", fit.lr_statistic, significance_stars(fit.lr_p_value));
  out += "Note: *** p<0.001; ** p<0.01; * p<0.05. Dashes (-) are the baseline levels.\n";
  return out;
}

std::string render_group_table(const Design& design, const std::map<Group, MnlFit>& fits) {
  if (fits.empty()) return "";
  std::string out = fmt::format("{:<12}{:<16}", "Attribute", "Level");
  for (const auto& [g, fit] : fits) out += fmt::format("{:<24}", fmt::format("{} (beta)", to_string(g)));
  out += '\n';
  const auto& refs = fits.begin()->second.estimates.reference_levels;
  for (std::size_t a = 0; a < design.attributes.size(); ++a) {
    const auto& attr = design.attributes[a];
    bool first = true;
    for (auto l : level_order(attr, refs.at(a))) {
      out += fmt::format("{:<12}{:<16}", first ? attr.name : "", attr.level_label(l));
      for (const auto& [g, fit] : fits) out += fmt::format("{:<24}", estimate_cell(fit, a, l));
      out += '\n';
      first = false;
    }
  }
  for (const auto& [g, fit] : fits)
    out += fmt::format("{}: LL {:.1f}, McFadden R2 {:.2f}, n {}\n", to_string(g), fit.log_likelihood, fit.mcfadden_r2,
                       fit.n_observations);
  out += "Note: *** p<0.001; ** p<0.01; * p<0.05. Dashes (-) are the baseline levels.\n";
  return out;
}

std::string render_profile_table(const Design& design) {
  std::string out = fmt::format("{:<4}", "ID");
  for (const auto& a : design.attributes) out += fmt::format("{:<15}", a.name);
  out += fmt::format("{:>5}{:>5}{:>5}{:>5}{:>5}\n", "T", "P", "A", "V", "E");
  for (const auto& p : design.profiles) {
    out += fmt::format("{:<4}", p.id);
    for (std::size_t a = 0; a < design.attributes.size(); ++a)
      out += fmt::format("{:<15}", design.attributes[a].level_label(p.levels[a]));
    if (p.histogram)
      for (auto pct : p.histogram->percentages()) out += fmt::format("{:>4}%", pct);
    out += '\n';
  }
  return out;
}

} // namespace ratingcbc
