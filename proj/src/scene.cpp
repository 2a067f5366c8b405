#include "sarseg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sarseg/rng.hpp"

namespace sarseg {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset,
                             const std::string& what) {
  throw std::runtime_error(path + ": " + what + " (byte offset " +
                           std::to_string(offset) + ")");
}

struct PgmRaw {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> bytes;
};

// P5 header: whitespace-separated tokens, '#' comments allowed.
PgmRaw read_p5(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < content.size()) {
      const char c = content[pos];
      if (c == '#') {
        while (pos < content.size() && content[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_token = [&]() -> std::string {
    skip_ws();
    const std::size_t start = pos;
    while (pos < content.size() && !std::isspace(static_cast<unsigned char>(content[pos])))
      ++pos;
    if (start == pos) parse_fail(path, start, "unexpected end of header");
    return content.substr(start, pos - start);
  };

  if (content.size() < 2 || content[0] != 'P' || content[1] != '5')
    parse_fail(path, 0, "not a binary PGM (P5) file");
  pos = 2;
  auto read_uint = [&](const char* field) -> std::size_t {
    const std::size_t at = pos;
    const std::string tok = read_token();
    std::size_t value = 0;
    for (char c : tok) {
      if (c < '0' || c > '9')
        parse_fail(path, at, std::string("malformed ") + field);
      value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    return value;
  };
  PgmRaw raw;
  raw.width = read_uint("width");
  raw.height = read_uint("height");
  const std::size_t maxval_at = pos;
  const std::size_t maxval = read_uint("maxval");
  if (maxval != 255) parse_fail(path, maxval_at, "unsupported maxval (expected 255)");
  if (raw.width == 0 || raw.height == 0)
    parse_fail(path, 2, "zero image dimension");
  // exactly one whitespace byte separates the header from the payload
  if (pos >= content.size()) parse_fail(path, pos, "missing payload");
  ++pos;
  const std::size_t need = raw.width * raw.height;
  if (content.size() - pos < need)
    parse_fail(path, content.size(), "truncated payload");
  raw.bytes.assign(content.begin() + static_cast<std::ptrdiff_t>(pos),
                   content.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return raw;
}

void write_p5(const std::string& path, std::size_t height, std::size_t width,
              const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

void PromptSpec::validate(std::size_t height, std::size_t width) const {
  for (const Click& c : clicks) {
    if (c.row >= height || c.col >= width)
      throw std::invalid_argument("click (" + std::to_string(c.row) + "," +
                                  std::to_string(c.col) + ") outside " +
                                  std::to_string(height) + "x" +
                                  std::to_string(width) + " image");
  }
  for (const Box& b : boxes) {
    if (b.row_min > b.row_max || b.col_min > b.col_max)
      throw std::invalid_argument("box with inverted corners");
    if (b.row_max >= height || b.col_max >= width)
      throw std::invalid_argument("box corner (" + std::to_string(b.row_max) +
                                  "," + std::to_string(b.col_max) +
                                  ") outside image");
  }
}

SarImage load_pgm(const std::string& path) {
  const PgmRaw raw = read_p5(path);
  SarImage img;
  img.height = raw.height;
  img.width = raw.width;
  img.pixels.resize(raw.bytes.size());
  for (std::size_t i = 0; i < raw.bytes.size(); ++i)
    img.pixels[i] = static_cast<double>(raw.bytes[i]) / 255.0;
  return img;
}

void save_pgm(const SarImage& img, const std::string& path) {
  std::vector<std::uint8_t> bytes(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::llround(v * 255.0));
  }
  write_p5(path, img.height, img.width, bytes);
}

LabelMap load_mask(const std::string& path, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("load_mask: num_classes < 2");
  const PgmRaw raw = read_p5(path);
  LabelMap mask;
  mask.height = raw.height;
  mask.width = raw.width;
  mask.num_classes = num_classes;
  mask.labels = raw.bytes;
  for (std::size_t i = 0; i < raw.bytes.size(); ++i) {
    if (raw.bytes[i] >= num_classes) {
      const std::size_t y = i / raw.width, x = i % raw.width;
      throw std::runtime_error(path + ": class byte " +
                               std::to_string(raw.bytes[i]) + " at pixel (" +
                               std::to_string(y) + "," + std::to_string(x) +
                               ") is outside 0.." +
                               std::to_string(num_classes - 1));
    }
  }
  return mask;
}

void save_mask(const LabelMap& mask, const std::string& path) {
  write_p5(path, mask.height, mask.width, mask.labels);
}

namespace {

struct Ellipse {
  double cy, cx, a, b, theta;  // center, semi-axes, rotation

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double u = dx * ct + dy * st;
    const double v = -dx * st + dy * ct;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

Ellipse draw_ellipse(Rand& rng, std::size_t h, std::size_t w, double semi_major,
                     double ecc) {
  Ellipse e;
  e.a = semi_major;
  e.b = std::max(1.0, semi_major / ecc);
  e.cy = rng.uniform(0.15 * static_cast<double>(h), 0.85 * static_cast<double>(h));
  e.cx = rng.uniform(0.15 * static_cast<double>(w), 0.85 * static_cast<double>(w));
  e.theta = rng.uniform(0.0, 3.14159265358979323846);
  return e;
}

}  // namespace

std::pair<SarImage, LabelMap> synth_scene(std::uint64_t seed,
                                          const SceneRegime& regime,
                                          std::size_t height, std::size_t width) {
  if (height < 8 || width < 8)
    throw std::invalid_argument("synth_scene: dims must be >= 8");
  if (regime.looks < 1) throw std::invalid_argument("synth_scene: looks < 1");
  if (regime.slick_min < 0 || regime.slick_max < regime.slick_min)
    throw std::invalid_argument("synth_scene: bad slick count range");

  Rand rng(seed ^ 0x5ca1ab1eULL);
  const double dim = static_cast<double>(std::min(height, width));
  const std::size_t n_pixels = height * width;

  LabelMap mask;
  mask.height = height;
  mask.width = width;
  mask.num_classes = 2;

  const int slick_count =
      static_cast<int>(rng.uniform_int(regime.slick_min, regime.slick_max));

  std::vector<Ellipse> slicks;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000)
      throw std::runtime_error("synth_scene: area band unreachable for regime " +
                               regime.name);
    slicks.clear();
    mask.labels.assign(n_pixels, 0);
    for (int i = 0; i < slick_count; ++i)
      slicks.push_back(draw_ellipse(rng, height, width,
                                    rng.uniform(0.10, 0.22) * dim,
                                    regime.eccentricity));
    std::size_t on = 0;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        for (const Ellipse& e : slicks)
          if (e.contains(static_cast<double>(y), static_cast<double>(x))) {
            mask.at(y, x) = 1;
            ++on;
            break;
          }
    if (slick_count == 0) break;
    const double frac = static_cast<double>(on) / static_cast<double>(n_pixels);
    if (frac >= regime.area_min && frac <= regime.area_max) break;
  }

  SarImage img;
  img.height = height;
  img.width = width;
  img.pixels.assign(n_pixels, regime.sea_mean);
  for (std::size_t i = 0; i < n_pixels; ++i)
    if (mask.labels[i] == 1) img.pixels[i] = regime.sea_mean * (1.0 - regime.slick_depth);

  // look-alikes darken intensity but stay class 0
  if (rng.uniform() < regime.lookalike_prob) {
    const int n_la = static_cast<int>(rng.uniform_int(1, 2));
    for (int i = 0; i < n_la; ++i) {
      const Ellipse e = draw_ellipse(rng, height, width,
                                     rng.uniform(0.08, 0.16) * dim,
                                     std::max(1.5, regime.eccentricity * 0.6));
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
          if (mask.at(y, x) == 0 &&
              e.contains(static_cast<double>(y), static_cast<double>(x)))
            img.at(y, x) *= 1.0 - regime.lookalike_depth;
    }
  }

  // multiplicative L-look speckle: gamma(L)/L has unit mean
  const double inv_l = 1.0 / static_cast<double>(regime.looks);
  for (double& p : img.pixels)
    p = std::clamp(p * rng.gamma_int(regime.looks) * inv_l, 0.0, 1.0);

  return {std::move(img), std::move(mask)};
}

PromptSpec derive_prompt(const LabelMap& mask) {
  // largest 4-connected class-1 component
  std::vector<int> comp(mask.labels.size(), -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < mask.labels.size(); ++start) {
    if (mask.labels[start] != 1 || comp[start] != -1) continue;
    std::deque<std::size_t> queue{start};
    comp[start] = next;
    std::size_t count = 0;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      ++count;
      const std::size_t y = p / mask.width, x = p % mask.width;
      const std::size_t nbrs[4][2] = {{y + 1, x}, {y, x + 1},
                                      {y == 0 ? y : y - 1, x},
                                      {y, x == 0 ? x : x - 1}};
      for (const auto& n : nbrs) {
        if (n[0] >= mask.height || n[1] >= mask.width) continue;
        const std::size_t q = n[0] * mask.width + n[1];
        if (mask.labels[q] == 1 && comp[q] == -1) {
          comp[q] = next;
          queue.push_back(q);
        }
      }
    }
    sizes.push_back(count);
    if (count > best_size) {
      best_size = count;
      best = next;
    }
    ++next;
  }

  PromptSpec prompt;
  if (best < 0) {
    prompt.clicks.push_back(
        {mask.height / 2, mask.width / 2, ClickPolarity::Negative});
    return prompt;
  }

  std::size_t rmin = mask.height, rmax = 0, cmin = mask.width, cmax = 0;
  double sum_y = 0.0, sum_x = 0.0;
  for (std::size_t p = 0; p < mask.labels.size(); ++p) {
    if (comp[p] != best) continue;
    const std::size_t y = p / mask.width, x = p % mask.width;
    rmin = std::min(rmin, y);
    rmax = std::max(rmax, y);
    cmin = std::min(cmin, x);
    cmax = std::max(cmax, x);
    sum_y += static_cast<double>(y);
    sum_x += static_cast<double>(x);
  }
  std::size_t cy = static_cast<std::size_t>(sum_y / static_cast<double>(best_size));
  std::size_t cx = static_cast<std::size_t>(sum_x / static_cast<double>(best_size));
  if (mask.at(cy, cx) != 1) {
    // centroid can fall outside thin shapes; snap to the nearest member pixel
    std::size_t best_d = SIZE_MAX, best_p = 0;
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
      if (comp[p] != best) continue;
      const std::size_t y = p / mask.width, x = p % mask.width;
      const std::size_t d = (y > cy ? y - cy : cy - y) + (x > cx ? x - cx : cx - x);
      if (d < best_d) {
        best_d = d;
        best_p = p;
      }
    }
    cy = best_p / mask.width;
    cx = best_p % mask.width;
  }
  prompt.clicks.push_back({cy, cx, ClickPolarity::Positive});
  prompt.boxes.push_back({rmin, cmin, rmax, cmax});
  return prompt;
}

std::map<std::string, PromptSpec> load_prompts(const std::string& path,
                                               std::size_t height,
                                               std::size_t width) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::map<std::string, PromptSpec> result;
  std::map<std::string, int> first_line;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad JSON: " + e.what());
    }
    auto fail = [&](const std::string& what) -> void {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
    };
    if (!rec.contains("image_id") || !rec["image_id"].is_string())
      fail("missing image_id");
    const std::string id = rec["image_id"].get<std::string>();
    if (auto it = first_line.find(id); it != first_line.end())
      fail("duplicate image_id '" + id + "' (first seen at line " +
           std::to_string(it->second) + ")");
    first_line[id] = line_no;

    PromptSpec prompt;
    for (const json& c : rec.value("clicks", json::array())) {
      if (!c.is_array() || c.size() != 3) fail("click must be [row, col, polarity]");
      const std::string pol = c[2].get<std::string>();
      if (pol != "pos" && pol != "neg") fail("unknown polarity '" + pol + "'");
      prompt.clicks.push_back({c[0].get<std::size_t>(), c[1].get<std::size_t>(),
                               pol == "pos" ? ClickPolarity::Positive
                                            : ClickPolarity::Negative});
    }
    for (const json& b : rec.value("boxes", json::array())) {
      if (!b.is_array() || b.size() != 4) fail("box must be [r0, c0, r1, c1]");
      prompt.boxes.push_back({b[0].get<std::size_t>(), b[1].get<std::size_t>(),
                              b[2].get<std::size_t>(), b[3].get<std::size_t>()});
    }
    try {
      prompt.validate(height, width);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    result[id] = std::move(prompt);
  }
  return result;
}

void save_prompts(const std::map<std::string, PromptSpec>& prompts,
                  const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  for (const auto& [id, prompt] : prompts) {
    json rec;
    rec["image_id"] = id;
    json clicks = json::array();
    for (const Click& c : prompt.clicks)
      clicks.push_back({c.row, c.col,
                        c.polarity == ClickPolarity::Positive ? "pos" : "neg"});
    rec["clicks"] = clicks;
    json boxes = json::array();
    for (const Box& b : prompt.boxes)
      boxes.push_back({b.row_min, b.col_min, b.row_max, b.col_max});
    rec["boxes"] = boxes;
    out << rec.dump() << "\n";
  }
}

namespace {

json regime_to_json(const SceneRegime& r) {
  return json{{"name", r.name},
              {"sea_mean", r.sea_mean},
              {"looks", r.looks},
              {"slick_min", r.slick_min},
              {"slick_max", r.slick_max},
              {"slick_depth", r.slick_depth},
              {"eccentricity", r.eccentricity},
              {"lookalike_prob", r.lookalike_prob},
              {"lookalike_depth", r.lookalike_depth},
              {"area_min", r.area_min},
              {"area_max", r.area_max}};
}

SceneRegime regime_from_json(const json& j) {
  SceneRegime r;
  r.name = j.value("name", r.name);
  r.sea_mean = j.value("sea_mean", r.sea_mean);
  r.looks = j.value("looks", r.looks);
  r.slick_min = j.value("slick_min", r.slick_min);
  r.slick_max = j.value("slick_max", r.slick_max);
  r.slick_depth = j.value("slick_depth", r.slick_depth);
  r.eccentricity = j.value("eccentricity", r.eccentricity);
  r.lookalike_prob = j.value("lookalike_prob", r.lookalike_prob);
  r.lookalike_depth = j.value("lookalike_depth", r.lookalike_depth);
  r.area_min = j.value("area_min", r.area_min);
  r.area_max = j.value("area_max", r.area_max);
  return r;
}

}  // namespace

StreamSpec load_stream_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": bad JSON: " + e.what());
  }
  StreamSpec spec;
  spec.seed = j.value("seed", 0ULL);
  spec.num_classes = j.value("num_classes", 2);
  spec.height = j.at("height").get<std::size_t>();
  spec.width = j.at("width").get<std::size_t>();
  spec.prompts_path = j.value("prompts", "");
  for (const json& s : j.value("segments", json::array())) {
    StreamSegment seg;
    seg.count = s.at("count").get<int>();
    seg.regime = regime_from_json(s.at("regime"));
    spec.segments.push_back(std::move(seg));
  }
  for (const json& e : j.value("entries", json::array())) {
    StreamEntry entry;
    entry.image_id = e.at("image_id").get<std::string>();
    entry.image_path = e.at("image").get<std::string>();
    entry.mask_path = e.value("mask", "");
    entry.prompt_id = e.value("prompt_id", "");
    spec.entries.push_back(std::move(entry));
  }
  spec.base_dir = std::filesystem::path(path).parent_path().string();
  return spec;
}

void save_stream_spec(const StreamSpec& spec, const std::string& path) {
  json j;
  j["seed"] = spec.seed;
  j["num_classes"] = spec.num_classes;
  j["height"] = spec.height;
  j["width"] = spec.width;
  if (!spec.prompts_path.empty()) j["prompts"] = spec.prompts_path;
  json segments = json::array();
  for (const StreamSegment& s : spec.segments)
    segments.push_back({{"count", s.count}, {"regime", regime_to_json(s.regime)}});
  j["segments"] = segments;
  json entries = json::array();
  for (const StreamEntry& e : spec.entries) {
    json rec{{"image_id", e.image_id}, {"image", e.image_path}};
    if (!e.mask_path.empty()) rec["mask"] = e.mask_path;
    if (!e.prompt_id.empty()) rec["prompt_id"] = e.prompt_id;
    entries.push_back(std::move(rec));
  }
  j["entries"] = entries;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

std::string resolve_path(const StreamSpec& spec, const std::string& rel) {
  if (rel.empty()) return rel;
  std::filesystem::path p(rel);
  if (p.is_absolute() || spec.base_dir.empty()) return rel;
  return (std::filesystem::path(spec.base_dir) / p).string();
}

}  // namespace sarseg
