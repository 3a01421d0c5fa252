#include "lpq/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace lpq {

namespace {

[[noreturn]] void fail(Errc code, SourcePos pos, const std::string& msg) {
  throw Error(code, "line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) + ": " + msg);
}

std::optional<double> to_real(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

class ExprParser {
 public:
  ExprParser(std::string_view text, const Regime& r, std::string base, SourcePos origin)
      : text_(text), regime_(r), base_(std::move(base)), origin_(origin) {}

  IntegrandSpec parse() {
    std::vector<IntegrandSpec> terms{term()};
    skip_ws();
    while (peek() == '+') {
      ++pos_;
      terms.push_back(term());
      skip_ws();
    }
    if (pos_ < text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return terms.size() == 1 ? terms.front() : IntegrandSpec::sum(std::move(terms));
  }

 private:
  SourcePos here(std::size_t at) const {
    SourcePos p = origin_;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++p.line;
        p.column = 1;
      } else {
        ++p.column;
      }
    }
    return p;
  }
  [[noreturn]] void error(const std::string& msg) const { fail(Errc::config_syntax, here(pos_), msg); }
  [[noreturn]] void semantic(std::size_t at, const std::string& msg) const {
    fail(Errc::config_semantic, here(at), msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool at_number() {
    skip_ws();
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+';
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    auto digits = [&] {
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    };
    if (peek() == '+' || peek() == '-') ++pos_;
    digits();
    if (peek() == '.') {
      ++pos_;
      digits();
    }
    if (peek() == 'e' || peek() == 'E') {
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      digits();
    }
    const auto v = to_real(text_.substr(start, pos_ - start));
    if (!v) {
      pos_ = start;
      error("expected a number");
    }
    return *v;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
    if (start == pos_) error("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  double named(const char* name) {
    const std::size_t at = pos_;
    const std::string got = identifier();
    if (got != name) {
      pos_ = at;
      skip_ws();
      error(std::string("expected '") + name + "'");
    }
    expect('=');
    return number();
  }

  IntegrandSpec term() {
    std::optional<double> coeff;
    if (at_number()) {
      coeff = number();
      expect('*');
    }
    IntegrandSpec a = atom();
    return coeff ? IntegrandSpec::scaled(*coeff, std::move(a)) : a;
  }

  IntegrandSpec atom() {
    skip_ws();
    const std::size_t at = pos_;
    const std::string name = identifier();
    expect('(');
    if (name == "power") {
      const double mu = named("mu");
      expect(',');
      const double p = named("p");
      expect(')');
      if (!(mu >= 0.0)) semantic(at, "power needs mu >= 0");
      if (!(p >= 1.0)) semantic(at, "power needs p >= 1");
      return IntegrandSpec::power(mu, p);
    }
    if (name == "axis") {
      const std::size_t iat = pos_;
      const double i = named("i");
      expect(',');
      const double q = named("q");
      expect(')');
      if (i != static_cast<double>(static_cast<int>(i))) {
        pos_ = iat;
        skip_ws();
        error("axis index must be an integer");
      }
      if (i < 1 || i > regime_.n)
        semantic(at, "axis index " + std::to_string(static_cast<int>(i)) + " outside 1.." + std::to_string(regime_.n));
      if (!(q >= 1.0)) semantic(at, "axis needs q >= 1");
      return IntegrandSpec::axis(static_cast<int>(i) - 1, q);
    }
    if (name == "poly") {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != ')') ++pos_;
      if (pos_ >= text_.size()) error("expected ')'");
      std::string file(text_.substr(start, pos_ - start));
      while (!file.empty() && std::isspace(static_cast<unsigned char>(file.back()))) file.pop_back();
      ++pos_;
      if (file.empty()) semantic(at, "poly needs a file name");
      std::filesystem::path path(file);
      if (path.is_relative()) path = base_ + "/" + file;
      try {
        return IntegrandSpec::polynomial(read_polynomial_file(path));
      } catch (const Error& e) {
        fail(e.code(), here(at), e.what());
      }
    }
    pos_ = at;
    error("unknown atom '" + name + "'");
  }

  std::string_view text_;
  const Regime& regime_;
  std::string base_;
  SourcePos origin_;
  std::size_t pos_ = 0;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

struct Entry {
  std::string value;
  SourcePos pos;
};

double real_of(const Entry& e) {
  const auto v = to_real(e.value);
  if (!v) fail(Errc::config_syntax, e.pos, "expected a number, got '" + e.value + "'");
  return *v;
}

long long int_of(const Entry& e) {
  const double v = real_of(e);
  if (v != static_cast<double>(static_cast<long long>(v))) fail(Errc::config_syntax, e.pos, "expected an integer");
  return static_cast<long long>(v);
}

std::vector<double> reals_of(const Entry& e) {
  std::vector<double> out;
  for (const auto& part : split(e.value, ',')) out.push_back(real_of({part, e.pos}));
  if (out.empty()) fail(Errc::config_syntax, e.pos, "expected a list of numbers");
  return out;
}

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"", {"seed"}},
      {"regime", {"n", "N", "p", "q", "mu", "L"}},
      {"integrand", {"expr"}},
      {"grid", {"cells_per_side"}},
      {"schedule", {"count", "epsilons", "mollifier_widths", "tol_energy", "tol_residual", "max_newton_iters"}},
      {"boundary", {"family", "amplitudes"}},
      {"diagnostics",
       {"estimates", "region", "center", "radius", "sobolev_exp", "t_grid", "cap", "radii", "alphas", "max_ratio"}},
      {"sweep", {"parameter", "values", "workers"}},
      {"check", {"samples", "r_min", "radius"}},
      {"conjugate", {"count", "radius", "points"}},
  };
  return keys;
}

std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> out;
  std::string section;
  out[section];
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string body = raw.substr(0, raw.find('#'));
    const std::string t = trim(body);
    if (t.empty()) continue;
    const int col = static_cast<int>(body.find_first_not_of(" \t")) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') fail(Errc::config_syntax, {line, col}, "unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!known_keys().count(section) || section.empty())
        fail(Errc::config_semantic, {line, col}, "unknown section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(Errc::config_syntax, {line, col}, "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const auto& allowed = known_keys().at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(Errc::config_semantic, {line, col},
           "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
    if (out[section].count(key)) fail(Errc::config_semantic, {line, col}, "duplicate key '" + key + "'");
    const std::size_t vstart = body.find_first_not_of(" \t", eq + 1);
    const int vcol = vstart == std::string::npos ? static_cast<int>(body.size()) + 1 : static_cast<int>(vstart) + 1;
    out[section][key] = Entry{trim(std::string_view(body).substr(eq + 1)), {line, vcol}};
  }
  return out;
}

const Entry* find(const Section& s, const std::string& key) {
  const auto it = s.find(key);
  return it == s.end() ? nullptr : &it->second;
}

}  // namespace

IntegrandSpec parse_integrand(std::string_view expr, const Regime& r, const std::filesystem::path& base_dir,
                              SourcePos origin) {
  return ExprParser(expr, r, base_dir.string(), origin).parse();
}

Polynomial read_polynomial_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_semantic, "cannot open polynomial file " + path.string());
  std::vector<Monomial> terms;
  int dim = -1;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw.substr(0, raw.find('#')));
    if (t.empty()) continue;
    std::istringstream is(t);
    std::string tok;
    std::vector<std::string> toks;
    while (is >> tok) toks.push_back(tok);
    const auto coeff = to_real(toks.front());
    if (!coeff || toks.size() < 2)
      throw Error(Errc::config_syntax, path.string() + " line " + std::to_string(line) + ": expected 'coeff e1 ... eD'");
    Monomial m;
    m.coeff = *coeff;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const auto e = to_real(toks[i]);
      if (!e || *e < 0 || *e != static_cast<double>(static_cast<int>(*e)))
        throw Error(Errc::config_syntax,
                    path.string() + " line " + std::to_string(line) + ": exponents must be nonnegative integers");
      m.exponents.push_back(static_cast<int>(*e));
    }
    if (dim >= 0 && static_cast<int>(m.exponents.size()) != dim)
      throw Error(Errc::config_semantic, path.string() + " line " + std::to_string(line) + ": inconsistent variable count");
    dim = static_cast<int>(m.exponents.size());
    terms.push_back(std::move(m));
  }
  if (terms.empty()) throw Error(Errc::config_semantic, path.string() + ": no monomials");
  return Polynomial::from_monomials(dim, terms);
}

Region DiagnosticsConfig::region(int dim) const {
  Region r = unit_box_region(dim, region_kind);
  if (!center.empty()) r.center = Eigen::Map<const Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(center.size()));
  r.radius = radius;
  return r;
}

IntegrandSpec ExperimentConfig::integrand_for_q(double q) const {
  std::string expr = integrand_expr;
  const std::string value = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", q);
    return std::string(buf);
  }();
  for (std::size_t at = expr.find("$q"); at != std::string::npos; at = expr.find("$q", at + value.size()))
    expr.replace(at, 2, value);
  Regime r = regime;
  r.q = q;
  return parse_integrand(expr, r, base_dir, integrand_pos);
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const auto sections = tokenize(text);
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  auto section = [&](const char* name) -> const Section& {
    static const Section empty;
    const auto it = sections.find(name);
    return it == sections.end() ? empty : it->second;
  };

  if (const Entry* e = find(section(""), "seed")) {
    const long long s = int_of(*e);
    if (s < 0) fail(Errc::config_semantic, e->pos, "seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }

  const Section& reg = section("regime");
  if (!sections.count("regime")) fail(Errc::config_semantic, {1, 1}, "missing [regime] section");
  auto required = [&](const char* key) -> const Entry& {
    const Entry* e = find(reg, key);
    if (!e) fail(Errc::config_semantic, {1, 1}, std::string("[regime] needs '") + key + "'");
    return *e;
  };
  cfg.regime.n = static_cast<int>(int_of(required("n")));
  cfg.regime.p = real_of(required("p"));
  cfg.regime.q = real_of(required("q"));
  cfg.regime.L = real_of(required("L"));
  if (const Entry* e = find(reg, "N")) cfg.regime.N = static_cast<int>(int_of(*e));
  if (const Entry* e = find(reg, "mu")) cfg.regime.mu = real_of(*e);
  try {
    check_regime(cfg.regime);
  } catch (const Error& err) {
    fail(Errc::config_semantic, required("n").pos, err.what());
  }

  if (const Entry* e = find(section("integrand"), "expr")) {
    cfg.integrand_expr = e->value;
    cfg.integrand_pos = e->pos;
    if (cfg.integrand_expr.find("$q") != std::string::npos)
      cfg.integrand = cfg.integrand_for_q(cfg.regime.q);
    else
      cfg.integrand = parse_integrand(e->value, cfg.regime, base_dir, e->pos);
    try {
      cfg.integrand->check_shape(cfg.regime.N, cfg.regime.n);
    } catch (const Error& err) {
      fail(Errc::config_semantic, e->pos, err.what());
    }
  }

  if (const Entry* e = find(section("grid"), "cells_per_side")) {
    cfg.grid_cells.clear();
    for (const double c : reals_of(*e)) {
      if (c < 2 || c != static_cast<double>(static_cast<int>(c)))
        fail(Errc::config_semantic, e->pos, "cells_per_side must be integers >= 2");
      cfg.grid_cells.push_back(static_cast<int>(c));
    }
  }

  const Section& sch = section("schedule");
  const Entry* count = find(sch, "count");
  const Entry* eps = find(sch, "epsilons");
  if (count && eps) fail(Errc::config_semantic, eps->pos, "give either count or epsilons");
  if (count) {
    const long long k = int_of(*count);
    if (k < 1 || k > 60) fail(Errc::config_semantic, count->pos, "count must lie in 1..60");
    cfg.schedule = Schedule::dyadic(static_cast<int>(k));
  }
  if (eps) cfg.schedule = Schedule::from_epsilons(reals_of(*eps));
  if (const Entry* e = find(sch, "mollifier_widths")) {
    cfg.schedule.mollifier_width = reals_of(*e);
    if (cfg.schedule.mollifier_width.size() != cfg.schedule.epsilons.size())
      fail(Errc::config_semantic, e->pos, "need one mollifier width per epsilon");
  }
  if (const Entry* e = find(sch, "tol_energy")) cfg.schedule.tol_energy = real_of(*e);
  if (const Entry* e = find(sch, "tol_residual")) cfg.schedule.tol_residual = real_of(*e);
  if (const Entry* e = find(sch, "max_newton_iters")) cfg.schedule.max_newton_iters = static_cast<int>(int_of(*e));
  try {
    cfg.schedule.validate();
  } catch (const Error& err) {
    fail(Errc::config_semantic, eps ? eps->pos : SourcePos{}, err.what());
  }

  const Section& bnd = section("boundary");
  if (const Entry* e = find(bnd, "family")) {
    cfg.boundary_family = e->value;
    if (e->value != "zero" && e->value != "affine" && e->value != "sine" && e->value != "random")
      fail(Errc::config_semantic, e->pos, "family must be zero, affine, sine or random");
  }
  if (const Entry* e = find(bnd, "amplitudes")) cfg.amplitudes = reals_of(*e);

  const Section& dg = section("diagnostics");
  auto& d = cfg.diagnostics;
  if (const Entry* e = find(dg, "estimates")) {
    d.estimates = split(e->value, ',');
    static const std::vector<std::string> known{"hdes", "sup", "revh", "logdecay", "cacc", "stress", "gehring"};
    for (const auto& id : d.estimates)
      if (std::find(known.begin(), known.end(), id) == known.end())
        fail(Errc::config_semantic, e->pos, "unknown estimate '" + id + "'");
  }
  if (const Entry* e = find(dg, "region")) {
    if (e->value == "ball") d.region_kind = RegionKind::ball;
    else if (e->value == "cube") d.region_kind = RegionKind::cube;
    else fail(Errc::config_semantic, e->pos, "region must be ball or cube");
  }
  if (const Entry* e = find(dg, "center")) {
    d.center = reals_of(*e);
    if (static_cast<int>(d.center.size()) != cfg.regime.n)
      fail(Errc::config_semantic, e->pos, "center needs n coordinates");
  }
  if (const Entry* e = find(dg, "radius")) d.radius = real_of(*e);
  if (const Entry* e = find(dg, "sobolev_exp")) d.sobolev_exp = real_of(*e);
  if (const Entry* e = find(dg, "t_grid")) d.t_grid = reals_of(*e);
  if (const Entry* e = find(dg, "cap")) d.cap = real_of(*e);
  if (const Entry* e = find(dg, "radii")) d.radii = reals_of(*e);
  if (const Entry* e = find(dg, "alphas")) d.alphas = reals_of(*e);
  if (const Entry* e = find(dg, "max_ratio")) d.max_ratio = real_of(*e);

  const Section& sw = section("sweep");
  if (const Entry* e = find(sw, "parameter")) {
    if (e->value != "q" && e->value != "amplitude") fail(Errc::config_semantic, e->pos, "parameter must be q or amplitude");
    cfg.sweep.parameter = e->value;
  }
  if (const Entry* e = find(sw, "values")) cfg.sweep.values = reals_of(*e);
  if (const Entry* e = find(sw, "workers")) {
    const long long w = int_of(*e);
    if (w < 0) fail(Errc::config_semantic, e->pos, "workers must be >= 0");
    cfg.sweep.workers = static_cast<int>(w);
  }

  const Section& ck = section("check");
  if (const Entry* e = find(ck, "samples")) {
    const long long s = int_of(*e);
    if (s < 1) fail(Errc::config_semantic, e->pos, "samples must be >= 1");
    cfg.check.samples = static_cast<int>(s);
  }
  if (const Entry* e = find(ck, "r_min")) cfg.check.r_min = real_of(*e);
  if (const Entry* e = find(ck, "radius")) cfg.check.radius = real_of(*e);

  const Section& cj = section("conjugate");
  if (const Entry* e = find(cj, "count")) {
    const long long c = int_of(*e);
    if (c < 0) fail(Errc::config_semantic, e->pos, "count must be >= 0");
    cfg.conjugate.count = static_cast<int>(c);
  }
  if (const Entry* e = find(cj, "radius")) cfg.conjugate.radius = real_of(*e);
  if (const Entry* e = find(cj, "points")) {
    for (const auto& pt : split(e->value, ';')) {
      if (pt.empty()) continue;
      auto v = reals_of({pt, e->pos});
      if (static_cast<int>(v.size()) != cfg.regime.N * cfg.regime.n)
        fail(Errc::config_semantic, e->pos, "each point needs N*n entries");
      cfg.conjugate.points.push_back(std::move(v));
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_semantic, "cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_config(os.str(), dir);
}

}  // namespace lpq
