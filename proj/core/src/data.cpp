#include "softhgr/data.hpp"

#include "softhgr/error.hpp"
#include "softhgr/random.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace softhgr::data {

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> parse_csv(const std::string& text) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          fail(ErrorKind::parse, "line " + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) fail(ErrorKind::parse, "line " + std::to_string(line) + ": unterminated quote");
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    fail(ErrorKind::parse, "line " + std::to_string(line) + ": column \"" + column +
                               "\" is not a finite number: \"" + s + "\"");
  }
  return value;
}

std::string_view kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::raw: return "raw";
  }
  return "raw";
}

ColumnKind parse_kind(const std::string& s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "raw") return ColumnKind::raw;
  fail(ErrorKind::schema, "unknown column type \"" + s + "\"");
}

std::string_view recipe_name(RecipeKind k) {
  switch (k) {
    case RecipeKind::random_joint: return "random_joint";
    case RecipeKind::latent_class: return "latent_class";
    case RecipeKind::split_vector: return "split_vector";
  }
  return "latent_class";
}

Eigen::Index column_width(const ColumnSpec& c) {
  return c.kind == ColumnKind::categorical ? static_cast<Eigen::Index>(c.vocabulary.size()) : 1;
}

}  // namespace

Matrix one_hot(const std::vector<int>& indices, Eigen::Index cardinality) {
  require(cardinality >= 1, ErrorKind::invalid_argument, "one_hot: cardinality must be >= 1");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), cardinality);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < cardinality, ErrorKind::invalid_argument,
            "one_hot: index " + std::to_string(indices[i]) + " out of range at row " +
                std::to_string(i));
    out(static_cast<Eigen::Index>(i), indices[i]) = 1.0;
  }
  return out;
}

DiscreteJoint gen_random_joint(Eigen::Index card_x, Eigen::Index card_y, double concentration,
                               std::uint64_t seed) {
  require(card_x >= 2 && card_y >= 2, ErrorKind::invalid_argument,
          "gen_random_joint: cardinalities must be >= 2");
  require(concentration > 0.0, ErrorKind::invalid_argument,
          "gen_random_joint: concentration must be positive");
  Rng rng(seed);
  Matrix w(card_x, card_y);
  for (Eigen::Index x = 0; x < card_x; ++x)
    for (Eigen::Index y = 0; y < card_y; ++y) w(x, y) = std::max(rng.gamma(concentration), 1e-300);
  return DiscreteJoint::from_counts(w);
}

Mask disjoint_missing_mask(Eigen::Index n, const std::vector<double>& fractions, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(fractions.size());
  double total = 0.0;
  for (const double f : fractions) {
    require(f >= 0.0 && f < 1.0, ErrorKind::invalid_argument, "missing fractions must lie in [0, 1)");
    total += f;
  }
  require(total <= 1.0, ErrorKind::invalid_argument, "missing fractions must sum to at most 1");
  Mask mask = Mask::Constant(n, d, true);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      acc += fractions[static_cast<std::size_t>(j)];
      if (u < acc) {
        mask(i, j) = false;
        break;
      }
    }
  }
  return mask;
}

LatentClassData gen_latent_class(const LatentClassParams& p) {
  require(p.classes >= 2, ErrorKind::invalid_argument, "gen_latent_class: need >= 2 classes");
  require(p.noise >= 0.0, ErrorKind::invalid_argument, "gen_latent_class: noise must be >= 0");
  require(!p.dims.empty(), ErrorKind::invalid_argument, "gen_latent_class: need >= 1 view");
  require(p.n >= 1, ErrorKind::invalid_argument, "gen_latent_class: n must be >= 1");
  require(p.label_fraction >= 0.0 && p.label_fraction <= 1.0, ErrorKind::invalid_argument,
          "gen_latent_class: label fraction must lie in [0, 1]");
  const std::size_t views = p.dims.size();
  Rng rng(p.seed);

  LatentClassData out;
  for (const auto dim : p.dims) {
    require(dim >= 1, ErrorKind::invalid_argument, "gen_latent_class: view width must be >= 1");
    Matrix c(p.classes, dim);
    for (Eigen::Index z = 0; z < c.rows(); ++z)
      for (Eigen::Index a = 0; a < dim; ++a) c(z, a) = p.centroid_scale * rng.normal();
    out.centroids.push_back(std::move(c));
  }

  ModalBatch& b = out.batch;
  b.class_count = p.classes;
  b.labels.resize(static_cast<std::size_t>(p.n));
  b.labeled = RowMask::Constant(p.n, false);
  for (std::size_t j = 0; j < views; ++j) b.inputs.emplace_back(p.n, p.dims[j]);
  for (Eigen::Index i = 0; i < p.n; ++i) {
    const int z = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.classes)));
    b.labels[static_cast<std::size_t>(i)] = z;
    for (std::size_t j = 0; j < views; ++j) {
      for (Eigen::Index a = 0; a < p.dims[j]; ++a)
        b.inputs[j](i, a) = out.centroids[j](z, a) + p.noise * rng.normal();
    }
    b.labeled(i) = rng.uniform() < p.label_fraction;
  }
  if (p.missing.empty()) {
    b.presence = Mask::Constant(p.n, static_cast<Eigen::Index>(views), true);
  } else {
    require(p.missing.size() == views, ErrorKind::invalid_argument,
            "gen_latent_class: one missing fraction per view required");
    b.presence = disjoint_missing_mask(p.n, p.missing, p.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t j = 0; j < views; ++j)
      for (Eigen::Index i = 0; i < p.n; ++i)
        if (!b.presence(i, static_cast<Eigen::Index>(j))) b.inputs[j].row(i).setZero();
  }
  return out;
}

int bayes_class(const Matrix& centroids, const RowVector& x) {
  Eigen::Index best = 0;
  (centroids.rowwise() - x).rowwise().squaredNorm().minCoeff(&best);
  return static_cast<int>(best);
}

ModalBatch split_halves(const Matrix& vectors) {
  require(vectors.cols() >= 2 && vectors.cols() % 2 == 0, ErrorKind::invalid_argument,
          "split_halves: dimension must be even");
  const Eigen::Index half = vectors.cols() / 2;
  return ModalBatch::complete({vectors.leftCols(half), vectors.rightCols(half)});
}

ModalBatch gen_split_vector(Eigen::Index dim, Eigen::Index n, std::uint64_t seed) {
  require(dim >= 2 && dim % 2 == 0, ErrorKind::invalid_argument,
          "gen_split_vector: dimension must be even");
  require(n >= 1, ErrorKind::invalid_argument, "gen_split_vector: n must be >= 1");
  constexpr int kHarmonics = 6;
  constexpr double kPixelNoise = 0.1;
  Rng rng(seed);
  Matrix v(n, dim);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a[kHarmonics];
    double b[kHarmonics];
    for (int h = 0; h < kHarmonics; ++h) {
      const double amp = 1.0 / (1.0 + h);
      a[h] = amp * rng.normal();
      b[h] = amp * rng.normal();
    }
    for (Eigen::Index t = 0; t < dim; ++t) {
      const double phase = static_cast<double>(t) / static_cast<double>(dim);
      double s = 0.0;
      for (int h = 0; h < kHarmonics; ++h) {
        s += a[h] * std::cos(two_pi * h * phase) + b[h] * std::sin(two_pi * h * phase);
      }
      v(i, t) = s + kPixelNoise * rng.normal();
    }
  }
  return split_halves(v);
}

SyntheticRecipe SyntheticRecipe::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("kind"), ErrorKind::schema,
          "synthetic recipe requires \"kind\"");
  SyntheticRecipe r;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "random_joint") r.kind = RecipeKind::random_joint;
  else if (kind == "latent_class") r.kind = RecipeKind::latent_class;
  else if (kind == "split_vector") r.kind = RecipeKind::split_vector;
  else fail(ErrorKind::schema, "unknown synthetic kind \"" + kind + "\"");
  r.card_x = j.value("card_x", r.card_x);
  r.card_y = j.value("card_y", r.card_y);
  r.concentration = j.value("concentration", r.concentration);
  r.classes = j.value("classes", r.classes);
  r.dims = j.value("dims", r.dims);
  r.noise = j.value("noise", r.noise);
  r.centroid_scale = j.value("centroid_scale", r.centroid_scale);
  r.dim = j.value("dim", r.dim);
  r.n = j.value("n", r.n);
  r.label_fraction = j.value("label_fraction", r.label_fraction);
  r.missing = j.value("missing", r.missing);
  r.seed = j.value("seed", r.seed);
  require(r.n >= 1, ErrorKind::schema, "synthetic recipe: n must be >= 1");
  require(r.label_fraction >= 0.0 && r.label_fraction <= 1.0, ErrorKind::schema,
          "synthetic recipe: label_fraction must lie in [0, 1]");
  for (const double f : r.missing) {
    require(f >= 0.0 && f < 1.0, ErrorKind::schema, "synthetic recipe: missing fractions must lie in [0, 1)");
  }
  return r;
}

nlohmann::json SyntheticRecipe::to_json() const {
  return {{"kind", recipe_name(kind)}, {"card_x", card_x}, {"card_y", card_y},
          {"concentration", concentration}, {"classes", classes}, {"dims", dims},
          {"noise", noise}, {"centroid_scale", centroid_scale}, {"dim", dim}, {"n", n},
          {"label_fraction", label_fraction}, {"missing", missing}, {"seed", seed}};
}

DatasetSpec DatasetSpec::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  require(j.is_object(), ErrorKind::schema, "dataset spec must be an object");
  DatasetSpec s;
  if (j.contains("synthetic")) {
    s.synthetic = SyntheticRecipe::from_json(j["synthetic"]);
  }
  if (j.contains("source")) {
    std::filesystem::path p = j["source"].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    s.path = p;
  }
  require(s.path.has_value() != s.synthetic.has_value(), ErrorKind::schema,
          "dataset spec needs exactly one of \"source\" or \"synthetic\"");
  if (j.contains("modalities")) {
    for (const auto& m : j["modalities"]) {
      ModalitySpec ms;
      ms.name = m.value("name", std::string{});
      for (const auto& c : m.at("columns")) {
        ColumnSpec cs;
        cs.name = c.at("name").get<std::string>();
        cs.kind = parse_kind(c.value("type", std::string("continuous")));
        if (cs.kind == ColumnKind::categorical) {
          cs.vocabulary = c.at("vocabulary").get<std::vector<std::string>>();
          require(!cs.vocabulary.empty(), ErrorKind::schema,
                  "categorical column \"" + cs.name + "\" has an empty vocabulary");
        }
        ms.columns.push_back(std::move(cs));
      }
      require(!ms.columns.empty(), ErrorKind::schema, "modality \"" + ms.name + "\" has no columns");
      s.modalities.push_back(std::move(ms));
    }
  }
  if (j.contains("label")) {
    LabelSpec l;
    l.column = j["label"].at("column").get<std::string>();
    l.vocabulary = j["label"].at("vocabulary").get<std::vector<std::string>>();
    s.label = std::move(l);
  }
  s.train_fraction = j.value("train_fraction", 1.0);
  require(s.train_fraction > 0.0 && s.train_fraction <= 1.0, ErrorKind::schema,
          "train_fraction must lie in (0, 1]");
  if (j.contains("normalization")) {
    for (const auto& [name, stats] : j["normalization"].items()) {
      s.normalization[name] = ColumnStats{stats.at("mean").get<double>(), stats.at("std").get<double>()};
    }
  }
  s.seed = j.value("seed", std::uint64_t{0});

  std::set<std::string> seen;
  for (const auto& m : s.modalities) {
    for (const auto& c : m.columns) {
      require(seen.insert(c.name).second, ErrorKind::schema,
              "column \"" + c.name + "\" appears in more than one group");
    }
  }
  if (s.label) {
    require(!seen.contains(s.label->column), ErrorKind::schema,
            "label column \"" + s.label->column + "\" is also a feature column");
  }
  if (s.path) {
    require(!s.modalities.empty(), ErrorKind::schema, "file dataset needs \"modalities\"");
  }
  return s;
}

nlohmann::json DatasetSpec::to_json() const {
  nlohmann::json j;
  if (path) j["source"] = path->string();
  if (synthetic) j["synthetic"] = synthetic->to_json();
  nlohmann::json mods = nlohmann::json::array();
  for (const auto& m : modalities) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : m.columns) {
      nlohmann::json cj{{"name", c.name}, {"type", kind_name(c.kind)}};
      if (c.kind == ColumnKind::categorical) cj["vocabulary"] = c.vocabulary;
      cols.push_back(cj);
    }
    mods.push_back({{"name", m.name}, {"columns", cols}});
  }
  j["modalities"] = mods;
  if (label) j["label"] = {{"column", label->column}, {"vocabulary", label->vocabulary}};
  j["train_fraction"] = train_fraction;
  if (!normalization.empty()) {
    nlohmann::json norm;
    for (const auto& [name, st] : normalization) norm[name] = {{"mean", st.mean}, {"std", st.stddev}};
    j["normalization"] = norm;
  }
  j["seed"] = seed;
  return j;
}

LoadedDataset load_csv(const std::filesystem::path& path, const DatasetSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  const std::vector<CsvRecord> records = parse_csv(text);
  require(!records.empty(), ErrorKind::parse, path.string() + ": missing header row");
  const auto& header = records.front().fields;
  require(records.size() >= 2, ErrorKind::empty_dataset, path.string() + ": no data rows");

  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index[header[c]] = c;
  auto column_index = [&](const std::string& name) {
    const auto it = index.find(name);
    require(it != index.end(), ErrorKind::parse,
            path.string() + ": header lacks column \"" + name + "\"");
    return it->second;
  };

  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  const auto d = static_cast<Eigen::Index>(spec.modalities.size());
  require(d >= 1, ErrorKind::schema, "dataset spec has no modalities");

  LoadedDataset out;
  ModalBatch& b = out.batch;
  b.presence = Mask::Constant(n, d, true);
  b.labeled = RowMask::Constant(n, false);
  for (const auto& m : spec.modalities) {
    Eigen::Index width = 0;
    for (const auto& c : m.columns) width += column_width(c);
    b.inputs.push_back(Matrix::Zero(n, width));
  }
  if (spec.label) {
    b.labels.assign(static_cast<std::size_t>(n), 0);
    b.class_count = static_cast<int>(spec.label->vocabulary.size());
  }

  // Pass 1: decode cells.
  for (Eigen::Index i = 0; i < n; ++i) {
    const CsvRecord& rec = records[static_cast<std::size_t>(i) + 1];
    require(rec.fields.size() == header.size(), ErrorKind::parse,
            path.string() + ": line " + std::to_string(rec.line) + " has " +
                std::to_string(rec.fields.size()) + " fields, header has " +
                std::to_string(header.size()));
    for (Eigen::Index j = 0; j < d; ++j) {
      const ModalitySpec& ms = spec.modalities[static_cast<std::size_t>(j)];
      Eigen::Index at = 0;
      for (const auto& c : ms.columns) {
        const std::string& cell = rec.fields[column_index(c.name)];
        if (cell.empty()) {
          b.presence(i, j) = false;
        } else if (c.kind == ColumnKind::categorical) {
          const auto it = std::find(c.vocabulary.begin(), c.vocabulary.end(), cell);
          require(it != c.vocabulary.end(), ErrorKind::vocabulary,
                  path.string() + ": line " + std::to_string(rec.line) + ": value \"" + cell +
                      "\" not in vocabulary of column \"" + c.name + "\"");
          b.inputs[static_cast<std::size_t>(j)](i, at + (it - c.vocabulary.begin())) = 1.0;
        } else {
          b.inputs[static_cast<std::size_t>(j)](i, at) = parse_number(cell, rec.line, c.name);
        }
        at += column_width(c);
      }
    }
    if (spec.label) {
      const std::string& cell = rec.fields[column_index(spec.label->column)];
      if (!cell.empty()) {
        const auto& vocab = spec.label->vocabulary;
        const auto it = std::find(vocab.begin(), vocab.end(), cell);
        require(it != vocab.end(), ErrorKind::vocabulary,
                path.string() + ": line " + std::to_string(rec.line) + ": label \"" + cell +
                    "\" not in label vocabulary");
        b.labels[static_cast<std::size_t>(i)] = static_cast<int>(it - vocab.begin());
        b.labeled(i) = true;
      }
    }
  }

  // Pass 2: standardize continuous columns with training-split statistics.
  const auto train_rows = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::floor(spec.train_fraction * static_cast<double>(n))));
  for (Eigen::Index j = 0; j < d; ++j) {
    const ModalitySpec& ms = spec.modalities[static_cast<std::size_t>(j)];
    Matrix& x = b.inputs[static_cast<std::size_t>(j)];
    Eigen::Index at = 0;
    for (const auto& c : ms.columns) {
      if (c.kind == ColumnKind::continuous) {
        ColumnStats st;
        if (const auto it = spec.normalization.find(c.name); it != spec.normalization.end()) {
          st = it->second;
        } else {
          double sum = 0.0;
          double sq = 0.0;
          Eigen::Index count = 0;
          for (Eigen::Index i = 0; i < train_rows; ++i) {
            if (!b.presence(i, j)) continue;
            sum += x(i, at);
            sq += x(i, at) * x(i, at);
            ++count;
          }
          if (count > 0) {
            st.mean = sum / static_cast<double>(count);
            const double var = count > 1 ? (sq - count * st.mean * st.mean) / static_cast<double>(count - 1) : 0.0;
            st.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
          }
        }
        out.normalization[c.name] = st;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (b.presence(i, j)) x(i, at) = (x(i, at) - st.mean) / st.stddev;
        }
      }
      at += column_width(c);
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (!b.presence(i, j)) x.row(i).setZero();
  }
  return out;
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
  if (spec.path) return load_csv(*spec.path, spec);
  const SyntheticRecipe& r = *spec.synthetic;
  LoadedDataset out;
  switch (r.kind) {
    case RecipeKind::random_joint: {
      const DiscreteJoint joint = gen_random_joint(r.card_x, r.card_y, r.concentration, r.seed);
      const IndexSamples s = sample(joint, static_cast<std::size_t>(r.n), r.seed + 1);
      out.batch = ModalBatch::complete({one_hot(s.x, r.card_x), one_hot(s.y, r.card_y)});
      break;
    }
    case RecipeKind::latent_class: {
      LatentClassParams p;
      p.classes = r.classes;
      p.dims = r.dims;
      p.noise = r.noise;
      p.centroid_scale = r.centroid_scale;
      p.n = r.n;
      p.label_fraction = r.label_fraction;
      p.missing = r.missing;
      p.seed = r.seed;
      out.batch = gen_latent_class(p).batch;
      break;
    }
    case RecipeKind::split_vector:
      out.batch = gen_split_vector(r.dim, r.n, r.seed);
      break;
  }
  return out;
}

DatasetSpec write_csv(const ModalBatch& batch, const std::filesystem::path& path) {
  batch.validate();
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());

  DatasetSpec spec;
  spec.path = path;
  std::vector<std::string> header;
  for (std::size_t j = 0; j < batch.modality_count(); ++j) {
    ModalitySpec ms;
    ms.name = "m" + std::to_string(j);
    for (Eigen::Index c = 0; c < batch.inputs[j].cols(); ++c) {
      ColumnSpec cs{ms.name + "_" + std::to_string(c), ColumnKind::raw, {}};
      header.push_back(cs.name);
      ms.columns.push_back(std::move(cs));
    }
    spec.modalities.push_back(std::move(ms));
  }
  if (batch.has_labels()) {
    LabelSpec l{"label", {}};
    for (int z = 0; z < batch.class_count; ++z) l.vocabulary.push_back(std::to_string(z));
    spec.label = l;
    header.push_back("label");
  }

  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < batch.modality_count(); ++j) {
      for (Eigen::Index c = 0; c < batch.inputs[j].cols(); ++c) {
        if (!first) out << ',';
        first = false;
        if (batch.presence(i, static_cast<Eigen::Index>(j))) {
          const auto res = std::to_chars(buf, buf + sizeof buf, batch.inputs[j](i, c));
          out.write(buf, res.ptr - buf);
        }
      }
    }
    if (batch.has_labels()) {
      out << ',';
      if (batch.labeled(i)) out << batch.labels[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
  return spec;
}

}  // namespace softhgr::data
