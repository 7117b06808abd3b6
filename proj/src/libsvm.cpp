#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "itm/errors.hpp"
#include "itm/problems.hpp"

namespace itm {

namespace {

double parse_number(std::string_view token, std::size_t line, const char* what) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(token) + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError(std::string("non-finite ") + what, line);
  return value;
}

long long parse_index(std::string_view token, std::size_t line) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError("malformed feature index '" + std::string(token) + "'", line);
  }
  if (value < 1) throw ParseError("feature indices are 1-based", line);
  return value;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const std::string& source) {
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> raw_labels;
  long long max_index = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    std::istringstream tokens(text);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line
    const auto row = static_cast<Eigen::Index>(raw_labels.size());
    raw_labels.push_back(parse_number(token, line_no, "label"));
    long long previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) throw ParseError("expected index:value, got '" + token + "'", line_no);
      const std::string_view view(token);
      const long long index = parse_index(view.substr(0, colon), line_no);
      if (index <= previous) throw ParseError("feature indices must be strictly ascending", line_no);
      previous = index;
      const double value = parse_number(view.substr(colon + 1), line_no, "feature value");
      entries.emplace_back(row, static_cast<Eigen::Index>(index - 1), value);
      max_index = std::max(max_index, index);
    }
  }
  if (raw_labels.empty()) throw ParseError("no examples", line_no);

  std::set<double> classes(raw_labels.begin(), raw_labels.end());
  if (classes.size() > 2) throw ParseError("more than two label classes", line_no);
  const bool signed_labels = std::all_of(classes.begin(), classes.end(), [](double v) { return v == 1.0 || v == -1.0; });
  const double low = *classes.begin();

  Dataset data;
  data.labels.resize(static_cast<Eigen::Index>(raw_labels.size()));
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    const double label = raw_labels[i];
    data.labels[static_cast<Eigen::Index>(i)] =
        signed_labels ? label : (classes.size() == 2 && label == low ? -1.0 : 1.0);
  }
  data.features.resize(static_cast<Eigen::Index>(raw_labels.size()), static_cast<Eigen::Index>(max_index));
  data.features.setFromTriplets(entries.begin(), entries.end());
  data.features.makeCompressed();
  data.source = source;
  return data;
}

Dataset parse_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_libsvm(in, path);
}

}  // namespace itm
