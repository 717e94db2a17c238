#include "pixelforge/config.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "pixelforge/bytes.hpp"
#include "pixelforge/errors.hpp"

namespace pixelforge {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ArgumentError(fmt::format("config key '{}': bad value '{}'", key, v));
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ArgumentError(fmt::format("config key '{}': expected a boolean, got '{}'", key, v));
}

}  // namespace

AdamWConfig TrainConfig::optimizer() const {
  AdamWConfig o;
  o.lr = lr;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.eps = eps;
  o.weight_decay = weight_decay;
  o.beta_ort = beta_ort;
  o.orthogonal = orthogonal;
  return o;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("config: ") + what);
  };
  require(d > 0, "d must be positive");
  require(v_hash > 0, "v_hash must be positive");
  require(grid_h > 0 && grid_w > 0, "grid_h and grid_w must be positive");
  require(k_pairs > 0, "k_pairs must be positive");
  require(batch_images > 0, "batch_images must be positive");
  require(lr >= 0.0, "lr must be nonnegative");
  require(weight_decay >= 0.0, "weight_decay must be nonnegative");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(eps > 0.0, "eps must be positive");
  require(beta_ort >= 0.0 && beta_ort < 1.0, "beta_ort must lie in [0, 1)");
  require(keep_prob >= 0.0 && keep_prob <= 1.0, "keep_prob must lie in [0, 1]");
}

TrainConfig parse_train_config(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ArgumentError(fmt::format("config line {}: expected key = value", line_no));
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "d") c.d = parse_number<std::size_t>(key, value);
    else if (key == "v_hash") c.v_hash = parse_number<std::size_t>(key, value);
    else if (key == "grid_h") c.grid_h = parse_number<std::size_t>(key, value);
    else if (key == "grid_w") c.grid_w = parse_number<std::size_t>(key, value);
    else if (key == "k_pairs") c.k_pairs = parse_number<std::size_t>(key, value);
    else if (key == "batch_images") c.batch_images = parse_number<std::size_t>(key, value);
    else if (key == "lr") c.lr = parse_number<double>(key, value);
    else if (key == "weight_decay") c.weight_decay = parse_number<double>(key, value);
    else if (key == "beta1") c.beta1 = parse_number<double>(key, value);
    else if (key == "beta2") c.beta2 = parse_number<double>(key, value);
    else if (key == "eps") c.eps = parse_number<double>(key, value);
    else if (key == "beta_ort") c.beta_ort = parse_number<double>(key, value);
    else if (key == "orthogonal") c.orthogonal = parse_bool(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "max_steps") c.max_steps = parse_number<std::uint64_t>(key, value);
    else if (key == "keep_prob") c.keep_prob = parse_number<double>(key, value);
    else throw ArgumentError(fmt::format("config line {}: unknown key '{}'", line_no, key));
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) { return parse_train_config(read_text_file(path)); }

std::string format_train_config(const TrainConfig& c) {
  return fmt::format(
      "d = {}\nv_hash = {}\ngrid_h = {}\ngrid_w = {}\nk_pairs = {}\nbatch_images = {}\nlr = {}\n"
      "weight_decay = {}\nbeta1 = {}\nbeta2 = {}\neps = {}\nbeta_ort = {}\northogonal = {}\nseed = {}\n"
      "max_steps = {}\nkeep_prob = {}\n",
      c.d, c.v_hash, c.grid_h, c.grid_w, c.k_pairs, c.batch_images, c.lr, c.weight_decay, c.beta1, c.beta2, c.eps,
      c.beta_ort, c.orthogonal, c.seed, c.max_steps, c.keep_prob);
}

}  // namespace pixelforge
