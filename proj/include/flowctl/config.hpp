#pragma once

#include <cctype>
#include <set>
#include <sstream>

#include "flowctl/common.hpp"
#include "flowctl/control.hpp"
#include "flowctl/costs.hpp"
#include "flowctl/sampler.hpp"
#include "flowctl/target.hpp"
#include "flowctl/train.hpp"

namespace flowctl {

// ---------------------------------------------------------------------------
// Declarative run-config file: `key = value` lines, [section] headers for
// nested tables, inline tables `{ k = v, ... }`, arrays `[a, b]`, strings,
// numbers, booleans, and # comments. Errors carry the offending line number.
// ---------------------------------------------------------------------------

class ConfigValue {
 public:
  enum class Type { String, Number, Boolean, Array, Table };

  Type type = Type::Table;
  int line = 0;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> array;
  std::vector<std::pair<std::string, ConfigValue>> table;  // insertion-ordered

  const ConfigValue* find(const std::string& key) const {
    for (const auto& [k, v] : table)
      if (k == key) return &v;
    return nullptr;
  }

  ConfigValue& insert(const std::string& key, int at_line) {
    for (auto& [k, v] : table)
      if (k == key) {
        if (v.type == Type::Table) return v;  // reopened section
        throw ConfigError("line " + std::to_string(at_line) + ": duplicate key '" + key + "'");
      }
    table.emplace_back(key, ConfigValue{});
    table.back().second.line = at_line;
    return table.back().second;
  }
};

namespace detail_cfg {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
  }
  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_inline_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos;
  }
  void skip_ws_and_comments() {
    for (;;) {
      skip_inline_ws();
      if (done()) return;
      if (peek() == '#') {
        while (!done() && peek() != '\n') ++pos;
        continue;
      }
      if (peek() == '\n') {
        take();
        continue;
      }
      return;
    }
  }
};

inline std::string parse_key(Cursor& c) {
  c.skip_inline_ws();
  std::string key;
  while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '_' ||
                       c.peek() == '.' || c.peek() == '-'))
    key.push_back(c.take());
  if (key.empty()) c.fail("expected a key");
  return key;
}

inline ConfigValue parse_value(Cursor& c);

inline ConfigValue parse_inline_table(Cursor& c) {
  ConfigValue v;
  v.type = ConfigValue::Type::Table;
  v.line = c.line;
  c.take();  // '{'
  c.skip_ws_and_comments();
  if (!c.done() && c.peek() == '}') {
    c.take();
    return v;
  }
  for (;;) {
    c.skip_ws_and_comments();
    const std::string key = parse_key(c);
    c.skip_inline_ws();
    if (c.done() || c.take() != '=') c.fail("expected '=' in inline table");
    ConfigValue& slot = v.insert(key, c.line);
    slot = parse_value(c);
    c.skip_ws_and_comments();
    if (c.done()) c.fail("unterminated inline table");
    const char sep = c.take();
    if (sep == '}') return v;
    if (sep != ',') c.fail("expected ',' or '}' in inline table");
  }
}

inline ConfigValue parse_array(Cursor& c) {
  ConfigValue v;
  v.type = ConfigValue::Type::Array;
  v.line = c.line;
  c.take();  // '['
  for (;;) {
    c.skip_ws_and_comments();
    if (c.done()) c.fail("unterminated array");
    if (c.peek() == ']') {
      c.take();
      return v;
    }
    v.array.push_back(parse_value(c));
    c.skip_ws_and_comments();
    if (c.done()) c.fail("unterminated array");
    if (c.peek() == ',') {
      c.take();
      continue;
    }
    if (c.peek() == ']') {
      c.take();
      return v;
    }
    c.fail("expected ',' or ']' in array");
  }
}

inline ConfigValue parse_value(Cursor& c) {
  c.skip_inline_ws();
  if (c.done()) c.fail("expected a value");
  ConfigValue v;
  v.line = c.line;
  const char ch = c.peek();
  if (ch == '"') {
    c.take();
    v.type = ConfigValue::Type::String;
    while (!c.done() && c.peek() != '"') v.str.push_back(c.take());
    if (c.done()) c.fail("unterminated string");
    c.take();
    return v;
  }
  if (ch == '{') return parse_inline_table(c);
  if (ch == '[') return parse_array(c);
  std::string word;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '}' && c.peek() != '\n' &&
         c.peek() != '#' && c.peek() != ' ' && c.peek() != '\t' && c.peek() != '\r')
    word.push_back(c.take());
  if (word == "true" || word == "false") {
    v.type = ConfigValue::Type::Boolean;
    v.boolean = word == "true";
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(word.c_str(), &end);
  if (end == word.c_str() || *end != '\0') c.fail("cannot parse value '" + word + "'");
  v.type = ConfigValue::Type::Number;
  v.num = num;
  return v;
}

}  // namespace detail_cfg

inline ConfigValue parse_config_text(const std::string& text) {
  detail_cfg::Cursor c{text};
  ConfigValue root;
  root.type = ConfigValue::Type::Table;
  ConfigValue* current = &root;
  for (;;) {
    c.skip_ws_and_comments();
    if (c.done()) return root;
    if (c.peek() == '[') {
      c.take();
      const std::string path = detail_cfg::parse_key(c);
      c.skip_inline_ws();
      if (c.done() || c.take() != ']') c.fail("unterminated section header");
      current = &root;
      std::size_t start = 0;
      while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) c.fail("empty section name");
        ConfigValue& next = current->insert(part, c.line);
        next.type = ConfigValue::Type::Table;
        current = &next;
        if (dot == std::string::npos) break;
        start = dot + 1;
      }
      continue;
    }
    const std::string key = detail_cfg::parse_key(c);
    c.skip_inline_ws();
    if (c.done() || c.take() != '=') c.fail("expected '=' after key '" + key + "'");
    const int line = c.line;
    ConfigValue& slot = current->insert(key, line);
    slot = detail_cfg::parse_value(c);
    c.skip_inline_ws();
    if (!c.done() && c.peek() != '\n' && c.peek() != '#')
      c.fail("trailing characters after value for '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// Typed run configuration. Unknown keys are rejected with their line number;
// the canonical text form round-trips losslessly.
// ---------------------------------------------------------------------------

struct ScheduleSpec {
  bool vp = false;
  int steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 2e-2;
};

struct FieldSpec {
  int dim = 2;
  std::vector<int> hidden{64, 64};
};

struct TargetSpec {
  std::string kind = "mixture";  // point | gaussian | mixture
  std::vector<Vec> centers{{-1.2, 0.0}, {1.2, 0.0}};
  double sigma = 0.35;
};

struct TrainSpec {
  int steps = 9000;
  int batch = 256;
  double lr = 4e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 12;
  double loss_threshold = 2.5;
};

struct SamplerSpec {
  int steps = 28;
  std::string mode = "ode";  // ode | sde
  double t_start = 1.0 / 28.0;
};

struct CostSpec {
  std::string kind = "focus";  // focus | cosine | none
  std::vector<double> lambdas{0.3};
  double gamma_reg = 0.0;
  std::string time_weight = "sigma2";  // none | sigma2
};

struct HeadSpec {
  int grid_h = 8;
  int grid_w = 8;
  int subjects = 2;
  int maps_per_subject = 2;
  double gamma = 24.0;
  double smoothing = 1.0;
  double proj_scale = 0.45;
  double slot_jitter = 0.15;
  std::uint64_t seed = 7;
};

struct FinetuneSpec {
  double lambda = 30.0;
  int steps = 800;
  int batch = 5;
  int subsample = 16;
  double lr = 2e-3;
  double weight_decay = 0.01;
  std::vector<int> hidden{32, 32};
  std::uint64_t seed = 99;
  int checkpoint_every = 0;
};

struct RunConfig {
  std::string out_dir = "runs/out";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  ScheduleSpec schedule;
  FieldSpec field;
  TargetSpec target;
  TrainSpec train;
  SamplerSpec sampler;
  CostSpec cost;
  HeadSpec head;
  FinetuneSpec finetune;

  static RunConfig from_text(const std::string& text);
  std::string to_text() const;
  std::string hash() const;

  InterpolantSchedule make_schedule() const {
    if (!schedule.vp) return InterpolantSchedule::rectified_flow();
    return vp_to_fm_schedule(VpRateTable::linear(schedule.steps, schedule.beta_min, schedule.beta_max));
  }

  ToyTarget make_target() const {
    if (target.kind == "point") return ToyTarget::point_mass(target.centers.at(0));
    if (target.kind == "gaussian") return ToyTarget::gaussian(target.centers.at(0), target.sigma);
    if (target.kind == "mixture") return ToyTarget::mixture(target.centers, target.sigma);
    throw ConfigError("unknown target kind '" + target.kind + "'");
  }

  SamplerConfig make_sampler(const InterpolantSchedule& sched) const {
    SamplerConfig cfg;
    cfg.steps = sampler.steps;
    cfg.t_start = sampler.t_start;
    if (sampler.mode == "ode") {
      cfg.mode = SamplerMode::Ode;
    } else if (sampler.mode == "sde") {
      cfg.mode = SamplerMode::Sde;
      cfg.diffusion = DiffusionSchedule::memoryless(sched);
    } else {
      throw ConfigError("unknown sampler mode '" + sampler.mode + "'");
    }
    cfg.validate();
    return cfg;
  }

  MapHeadConfig make_head() const {
    MapHeadConfig cfg;
    cfg.grid_h = head.grid_h;
    cfg.grid_w = head.grid_w;
    cfg.subjects = head.subjects;
    cfg.maps_per_subject = head.maps_per_subject;
    cfg.state_dim = field.dim;
    cfg.gamma = head.gamma;
    cfg.smooth_width = head.smoothing;
    cfg.proj_scale = head.proj_scale;
    cfg.slot_jitter = head.slot_jitter;
    cfg.seed = head.seed;
    return cfg;
  }

  CostKind cost_kind() const {
    if (cost.kind == "focus") return CostKind::Focus;
    if (cost.kind == "cosine") return CostKind::Cosine;
    throw ConfigError("unknown cost kind '" + cost.kind + "'");
  }

  TimeWeight time_weight() const {
    if (cost.time_weight == "none") return TimeWeight::None;
    if (cost.time_weight == "sigma2") return TimeWeight::SigmaMemSq;
    throw ConfigError("unknown time weight '" + cost.time_weight + "'");
  }

  TrainConfig make_train() const {
    TrainConfig cfg;
    cfg.steps = train.steps;
    cfg.batch = train.batch;
    cfg.seed = train.seed;
    cfg.opt.lr = train.lr;
    cfg.opt.weight_decay = train.weight_decay;
    cfg.loss_threshold = train.loss_threshold;
    return cfg;
  }

  AMConfig make_finetune() const {
    AMConfig cfg;
    cfg.lambda = finetune.lambda;
    cfg.iterations = finetune.steps;
    cfg.batch_trajectories = finetune.batch;
    cfg.subsample_steps = finetune.subsample;
    cfg.opt.lr = finetune.lr;
    cfg.opt.weight_decay = finetune.weight_decay;
    cfg.control_hidden = finetune.hidden;
    cfg.sampler.steps = sampler.steps;
    cfg.sampler.t_start = sampler.t_start;
    cfg.checkpoint_every = finetune.checkpoint_every;
    cfg.validate();
    return cfg;
  }

  std::string scene_id() const {
    return "head" + std::to_string(head.seed) + "-s" + std::to_string(head.subjects) + "m" +
           std::to_string(head.maps_per_subject);
  }
};

namespace detail_cfg {

// tracks which keys were consumed so unknown ones fail loudly
struct TableReader {
  const ConfigValue& table;
  std::set<std::string> seen;

  explicit TableReader(const ConfigValue& t) : table(t) {
    if (t.type != ConfigValue::Type::Table)
      throw ConfigError("line " + std::to_string(t.line) + ": expected a table");
  }

  const ConfigValue* get(const std::string& key) {
    seen.insert(key);
    return table.find(key);
  }

  void finish(const std::string& where) const {
    for (const auto& [k, v] : table.table)
      if (!seen.count(k))
        throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" +
                          (where.empty() ? k : where + "." + k) + "'");
  }
};

inline double as_number(const ConfigValue& v, const std::string& key) {
  if (v.type != ConfigValue::Type::Number)
    throw ConfigError("line " + std::to_string(v.line) + ": '" + key + "' must be a number");
  return v.num;
}

inline int as_int(const ConfigValue& v, const std::string& key) {
  const double d = as_number(v, key);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw ConfigError("line " + std::to_string(v.line) + ": '" + key + "' must be an integer");
  return i;
}

inline std::uint64_t as_seed(const ConfigValue& v, const std::string& key) {
  const double d = as_number(v, key);
  if (d < 0 || d != std::floor(d))
    throw ConfigError("line " + std::to_string(v.line) + ": '" + key + "' must be a nonnegative integer");
  return static_cast<std::uint64_t>(d);
}

inline std::string as_string(const ConfigValue& v, const std::string& key) {
  if (v.type != ConfigValue::Type::String)
    throw ConfigError("line " + std::to_string(v.line) + ": '" + key + "' must be a string");
  return v.str;
}

template <class T, class Fn>
std::vector<T> as_list(const ConfigValue& v, const std::string& key, Fn&& elem) {
  if (v.type == ConfigValue::Type::Array) {
    std::vector<T> out;
    for (const auto& e : v.array) out.push_back(elem(e, key));
    return out;
  }
  return {elem(v, key)};  // a bare scalar is a one-element list
}

}  // namespace detail_cfg

inline RunConfig RunConfig::from_text(const std::string& text) {
  using namespace detail_cfg;
  const ConfigValue root = parse_config_text(text);
  RunConfig cfg;
  TableReader top(root);

  if (const auto* v = top.get("out_dir")) cfg.out_dir = as_string(*v, "out_dir");
  if (const auto* v = top.get("seeds")) cfg.seeds = as_list<std::uint64_t>(*v, "seeds", as_seed);
  if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");

  if (const auto* v = top.get("schedule")) {
    if (v->type == ConfigValue::Type::String) {
      if (v->str != "rectified_flow")
        throw ConfigError("line " + std::to_string(v->line) + ": unknown schedule '" + v->str + "'");
      cfg.schedule.vp = false;
    } else {
      TableReader sched(*v);
      const auto* vp = sched.get("vp");
      if (!vp) throw ConfigError("line " + std::to_string(v->line) + ": schedule table needs 'vp'");
      TableReader vpr(*vp);
      cfg.schedule.vp = true;
      if (const auto* k = vpr.get("K")) cfg.schedule.steps = as_int(*k, "schedule.vp.K");
      if (const auto* b = vpr.get("beta_min")) cfg.schedule.beta_min = as_number(*b, "schedule.vp.beta_min");
      if (const auto* b = vpr.get("beta_max")) cfg.schedule.beta_max = as_number(*b, "schedule.vp.beta_max");
      vpr.finish("schedule.vp");
      sched.finish("schedule");
    }
  }

  if (const auto* v = top.get("field")) {
    TableReader t(*v);
    if (const auto* d = t.get("dim")) cfg.field.dim = as_int(*d, "field.dim");
    if (const auto* h = t.get("hidden")) cfg.field.hidden = as_list<int>(*h, "field.hidden", as_int);
    t.finish("field");
  }

  if (const auto* v = top.get("target")) {
    TableReader t(*v);
    if (const auto* k = t.get("kind")) cfg.target.kind = as_string(*k, "target.kind");
    if (const auto* s = t.get("sigma")) cfg.target.sigma = as_number(*s, "target.sigma");
    if (const auto* mu = t.get("mu"))
      cfg.target.centers = {as_list<double>(*mu, "target.mu", as_number)};
    if (const auto* cs = t.get("centers")) {
      cfg.target.centers.clear();
      if (cs->type != ConfigValue::Type::Array)
        throw ConfigError("line " + std::to_string(cs->line) + ": 'target.centers' must be an array");
      for (const auto& c : cs->array)
        cfg.target.centers.push_back(as_list<double>(c, "target.centers", as_number));
    }
    t.finish("target");
  }

  if (const auto* v = top.get("train")) {
    TableReader t(*v);
    if (const auto* x = t.get("steps")) cfg.train.steps = as_int(*x, "train.steps");
    if (const auto* x = t.get("batch")) cfg.train.batch = as_int(*x, "train.batch");
    if (const auto* x = t.get("lr")) cfg.train.lr = as_number(*x, "train.lr");
    if (const auto* x = t.get("weight_decay")) cfg.train.weight_decay = as_number(*x, "train.weight_decay");
    if (const auto* x = t.get("seed")) cfg.train.seed = as_seed(*x, "train.seed");
    if (const auto* x = t.get("loss_threshold")) cfg.train.loss_threshold = as_number(*x, "train.loss_threshold");
    t.finish("train");
  }

  if (const auto* v = top.get("sampler")) {
    TableReader t(*v);
    if (const auto* x = t.get("steps")) cfg.sampler.steps = as_int(*x, "sampler.steps");
    if (const auto* x = t.get("mode")) cfg.sampler.mode = as_string(*x, "sampler.mode");
    if (const auto* x = t.get("t_start")) cfg.sampler.t_start = as_number(*x, "sampler.t_start");
    t.finish("sampler");
  }

  if (const auto* v = top.get("cost")) {
    TableReader t(*v);
    if (const auto* x = t.get("kind")) cfg.cost.kind = as_string(*x, "cost.kind");
    if (const auto* x = t.get("lambda")) cfg.cost.lambdas = as_list<double>(*x, "cost.lambda", as_number);
    if (const auto* x = t.get("gamma_reg")) cfg.cost.gamma_reg = as_number(*x, "cost.gamma_reg");
    if (const auto* x = t.get("time_weight")) cfg.cost.time_weight = as_string(*x, "cost.time_weight");
    if (const auto* x = t.get("head")) {
      TableReader h(*x);
      if (const auto* g = h.get("grid")) {
        const auto dims = as_list<int>(*g, "cost.head.grid", as_int);
        if (dims.size() != 2) throw ConfigError("cost.head.grid needs [rows, cols]");
        cfg.head.grid_h = dims[0];
        cfg.head.grid_w = dims[1];
      }
      if (const auto* s = h.get("subjects")) cfg.head.subjects = as_int(*s, "cost.head.subjects");
      if (const auto* m = h.get("maps_per_subject"))
        cfg.head.maps_per_subject = as_int(*m, "cost.head.maps_per_subject");
      if (const auto* g = h.get("gamma")) cfg.head.gamma = as_number(*g, "cost.head.gamma");
      if (const auto* s = h.get("smoothing")) cfg.head.smoothing = as_number(*s, "cost.head.smoothing");
      if (const auto* p = h.get("proj_scale")) cfg.head.proj_scale = as_number(*p, "cost.head.proj_scale");
      if (const auto* j = h.get("slot_jitter")) cfg.head.slot_jitter = as_number(*j, "cost.head.slot_jitter");
      if (const auto* s = h.get("seed")) cfg.head.seed = as_seed(*s, "cost.head.seed");
      h.finish("cost.head");
    }
    t.finish("cost");
  }

  if (const auto* v = top.get("finetune")) {
    TableReader t(*v);
    if (const auto* x = t.get("lambda")) cfg.finetune.lambda = as_number(*x, "finetune.lambda");
    if (const auto* x = t.get("steps")) cfg.finetune.steps = as_int(*x, "finetune.steps");
    if (const auto* x = t.get("batch")) cfg.finetune.batch = as_int(*x, "finetune.batch");
    if (const auto* x = t.get("subsample")) cfg.finetune.subsample = as_int(*x, "finetune.subsample");
    if (const auto* x = t.get("lr")) cfg.finetune.lr = as_number(*x, "finetune.lr");
    if (const auto* x = t.get("weight_decay"))
      cfg.finetune.weight_decay = as_number(*x, "finetune.weight_decay");
    if (const auto* x = t.get("hidden")) cfg.finetune.hidden = as_list<int>(*x, "finetune.hidden", as_int);
    if (const auto* x = t.get("seed")) cfg.finetune.seed = as_seed(*x, "finetune.seed");
    if (const auto* x = t.get("checkpoint_every"))
      cfg.finetune.checkpoint_every = as_int(*x, "finetune.checkpoint_every");
    t.finish("finetune");
  }

  top.finish("");
  return cfg;
}

inline std::string RunConfig::to_text() const {
  std::ostringstream out;
  char buf[32];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "out_dir = \"" << out_dir << "\"\n";
  out << "seeds = [";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? ", " : "") << seeds[i];
  out << "]\n";
  if (!schedule.vp) {
    out << "schedule = \"rectified_flow\"\n";
  } else {
    out << "schedule = { vp = { K = " << schedule.steps << ", beta_min = " << num(schedule.beta_min)
        << ", beta_max = " << num(schedule.beta_max) << " } }\n";
  }
  out << "\n[field]\ndim = " << field.dim << "\nhidden = [";
  for (std::size_t i = 0; i < field.hidden.size(); ++i) out << (i ? ", " : "") << field.hidden[i];
  out << "]\n";
  out << "\n[target]\nkind = \"" << target.kind << "\"\nsigma = " << num(target.sigma) << "\ncenters = [";
  for (std::size_t i = 0; i < target.centers.size(); ++i) {
    out << (i ? ", " : "") << "[";
    for (std::size_t j = 0; j < target.centers[i].size(); ++j)
      out << (j ? ", " : "") << num(target.centers[i][j]);
    out << "]";
  }
  out << "]\n";
  out << "\n[train]\nsteps = " << train.steps << "\nbatch = " << train.batch
      << "\nlr = " << num(train.lr) << "\nweight_decay = " << num(train.weight_decay)
      << "\nseed = " << train.seed << "\nloss_threshold = " << num(train.loss_threshold) << "\n";
  out << "\n[sampler]\nsteps = " << sampler.steps << "\nmode = \"" << sampler.mode
      << "\"\nt_start = " << num(sampler.t_start) << "\n";
  out << "\n[cost]\nkind = \"" << cost.kind << "\"\nlambda = [";
  for (std::size_t i = 0; i < cost.lambdas.size(); ++i) out << (i ? ", " : "") << num(cost.lambdas[i]);
  out << "]\ngamma_reg = " << num(cost.gamma_reg) << "\ntime_weight = \"" << cost.time_weight << "\"\n";
  out << "\n[cost.head]\ngrid = [" << head.grid_h << ", " << head.grid_w << "]\nsubjects = " << head.subjects
      << "\nmaps_per_subject = " << head.maps_per_subject << "\ngamma = " << num(head.gamma)
      << "\nsmoothing = " << num(head.smoothing) << "\nproj_scale = " << num(head.proj_scale)
      << "\nslot_jitter = " << num(head.slot_jitter) << "\nseed = " << head.seed << "\n";
  out << "\n[finetune]\nlambda = " << num(finetune.lambda) << "\nsteps = " << finetune.steps
      << "\nbatch = " << finetune.batch << "\nsubsample = " << finetune.subsample
      << "\nlr = " << num(finetune.lr) << "\nweight_decay = " << num(finetune.weight_decay) << "\nhidden = [";
  for (std::size_t i = 0; i < finetune.hidden.size(); ++i) out << (i ? ", " : "") << finetune.hidden[i];
  out << "]\nseed = " << finetune.seed << "\ncheckpoint_every = " << finetune.checkpoint_every << "\n";
  return out.str();
}

inline std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(checksum(to_text())));
  return buf;
}

}  // namespace flowctl
