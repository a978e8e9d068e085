#include "sprinter/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sprinter/ordinal.hpp"

namespace sprinter {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto r = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || r.ec != std::errc() || r.ptr != token.data() + token.size()) {
    throw InputError("cannot parse '" + std::string(token) + "' as a number");
  }
  return v;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

CsvData parse_csv(std::string_view text, bool response_last) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw InputError("CSV input is empty");

  std::vector<std::string> names;
  for (auto f : split(lines[0])) names.push_back(trim(f));
  const std::size_t width = names.size();
  std::size_t ycol = width;
  for (std::size_t j = 0; j < width; ++j) {
    if (names[j] == "y") ycol = j;
  }
  if (ycol == width && response_last) ycol = width - 1;

  CsvData out;
  for (std::size_t j = 0; j < width; ++j) {
    if (j != ycol) out.header.push_back(names[j]);
  }
  const std::size_t rows = lines.size() - 1;
  const std::size_t p = out.header.size();
  out.x = Matrix(rows, p);
  if (ycol != width) out.y.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = split(lines[r + 1]);
    const std::string where = "line " + std::to_string(r + 2);
    if (fields.size() != width) {
      throw InputError("ragged CSV: " + where + " has " + std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(width));
    }
    std::size_t col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      double v;
      try {
        v = parse_double(fields[j]);
      } catch (const InputError& e) {
        throw InputError(where + ", column '" + names[j] + "': " + e.what());
      }
      if (!std::isfinite(v)) throw InputError(where + ", column '" + names[j] + "': non-finite value");
      if (j == ycol) {
        out.y[r] = v;
      } else {
        out.x(r, col++) = v;
      }
    }
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FileError("failed writing '" + path + "'");
}

CsvData read_csv(const std::string& path, bool response_last) {
  const std::string text = read_text(path);
  try {
    return parse_csv(text, response_last);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string format_csv(MatrixView x, std::span<const double> y) {
  if (!y.empty() && y.size() != x.rows()) throw DimensionError("format_csv: response length mismatch");
  std::string out;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j + 1);
  }
  if (!y.empty()) out += x.cols() ? ",y" : "y";
  out += '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (j) out += ',';
      out += format_double(x(i, j));
    }
    if (!y.empty()) {
      if (x.cols()) out += ',';
      out += format_double(y[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, MatrixView x, std::span<const double> y) {
  write_text(path, format_csv(x, y));
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const SprinterConfig& cfg, std::string_view family) {
  std::string s;
  s += "family=" + std::string(family);
  s += ";m=" + std::to_string(cfg.m);
  s += ";threshold=" + std::string(cfg.use_threshold ? "1" : "0");
  s += ";eta=" + format_double(cfg.eta);
  s += ";alpha=" + format_double(cfg.alpha);
  s += ";cv=" + std::to_string(cfg.cv_folds);
  s += ";tuning=" + std::string(cfg.tuning == Tuning::kJoint ? "joint" : "sequential");
  s += ";seed=" + std::to_string(cfg.seed);
  s += ";n_lambda=" + std::to_string(cfg.n_lambda);
  s += ";joint_lambda1=" + std::to_string(cfg.joint_lambda1);
  s += ";squares=" + std::string(cfg.include_squares ? "1" : "0");
  s += ";early_stop=" + std::string(cfg.early_stop ? "1" : "0");
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string model_to_json(const ModelFile& m) {
  const LinearModel& lm = m.model;
  Json j;
  j["format_version"] = m.format_version;
  j["family"] = m.family;
  j["p"] = lm.p();
  j["x_center"] = lm.x_center;
  j["x_scale"] = lm.x_scale;
  j["intercept"] = lm.intercept;
  Json mains = Json::array();
  for (std::size_t k = 0; k < lm.main.size(); ++k) {
    if (lm.main[k] != 0.0) mains.push_back(Json::array({k, lm.main[k]}));
  }
  j["main_coefs"] = mains;
  Json inter = Json::array();
  for (const auto& t : lm.interactions) inter.push_back(Json::array({t.a, t.b, t.coef}));
  j["interactions"] = inter;
  if (!lm.cutpoints.empty()) j["cutpoints"] = lm.cutpoints;
  j["degenerate"] = m.degenerate;
  j["lambda1"] = m.lambda1;
  j["lambda4"] = m.lambda4;
  Json prov;
  prov["seed"] = m.provenance.seed;
  prov["config_hash"] = m.provenance.config_hash;
  if (m.provenance.created) prov["created"] = *m.provenance.created;
  j["provenance"] = prov;
  return j.dump(2) + "\n";
}

ModelFile model_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  ModelFile m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion) {
      throw InputError("unsupported model format_version " + std::to_string(m.format_version));
    }
    m.family = j.at("family").get<std::string>();
    LinearModel& lm = m.model;
    lm.family = m.family == "ordinal" ? Family::binomial() : parse_family(m.family);
    const auto p = j.at("p").get<std::size_t>();
    lm.x_center = j.at("x_center").get<std::vector<double>>();
    lm.x_scale = j.at("x_scale").get<std::vector<double>>();
    if (lm.x_center.size() != p || lm.x_scale.size() != p) throw InputError("model standardization length mismatch");
    lm.intercept = j.at("intercept").get<double>();
    lm.main.assign(p, 0.0);
    for (const auto& e : j.at("main_coefs")) {
      const auto k = e.at(0).get<std::size_t>();
      if (k >= p) throw InputError("model main coefficient index out of range");
      lm.main[k] = e.at(1).get<double>();
    }
    for (const auto& e : j.at("interactions")) {
      InteractionTerm t{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()};
      if (t.a >= p || t.b >= p) throw InputError("model interaction index out of range");
      lm.interactions.push_back(t);
    }
    if (j.contains("cutpoints")) lm.cutpoints = j.at("cutpoints").get<std::vector<double>>();
    if (m.family == "ordinal" && lm.cutpoints.empty()) throw InputError("ordinal model without cutpoints");
    m.degenerate = j.value("degenerate", false);
    m.lambda1 = j.value("lambda1", 0.0);
    m.lambda4 = j.value("lambda4", 0.0);
    if (j.contains("provenance")) {
      const auto& pv = j.at("provenance");
      m.provenance.seed = pv.value("seed", std::uint64_t{0});
      m.provenance.config_hash = pv.value("config_hash", std::string());
      if (pv.contains("created")) m.provenance.created = pv.at("created").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

void save_model(const std::string& path, const ModelFile& m) { write_text(path, model_to_json(m)); }

ModelFile load_model(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return model_from_json(text);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::string format_screen_csv(const ScreenResult& screen) {
  std::string out = "a,b,gamma_hat\n";
  for (const auto& e : screen.selected) {
    out += std::to_string(e.pair.a) + "," + std::to_string(e.pair.b) + "," + format_double(e.gamma) + "\n";
  }
  return out;
}

std::string format_predictions(const ModelFile& m, MatrixView x) {
  std::string out;
  if (!m.model.cutpoints.empty()) {
    const Matrix probs = ordinal_probabilities(m.model, x);
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      if (c) out += ',';
      out += "prob_" + std::to_string(c + 1);
    }
    out += '\n';
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      for (std::size_t c = 0; c < probs.cols(); ++c) {
        if (c) out += ',';
        out += format_double(probs(i, c));
      }
      out += '\n';
    }
    return out;
  }
  out = "mean\n";
  for (double v : m.model.mean(x)) out += format_double(v) + "\n";
  return out;
}

}  // namespace sprinter
