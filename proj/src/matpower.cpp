#include "gridopt/matpower.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gridopt/error.hpp"

namespace gridopt {

namespace {

const char* errc_names[] = {
    "io_error",        "missing_section",   "ragged_matrix",
    "token_error",     "no_reference_bus",  "dangling_endpoint",
    "unsupported_cost_model", "invalid_impedance", "bounds_crossed",
    "foreign_variable", "unsupported_on_off_form", "option_error",
    "internal_error",
};

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char get() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  [[noreturn]] void error(const std::string& msg) const {
    fail(Errc::token_error, msg + " at " + std::to_string(line) + ":" + std::to_string(col));
  }

  // Skip spaces, tabs, carriage returns, commas and %-comments.  Newlines are
  // significant inside matrices, so they are skipped only when asked.
  void skip_blank(bool skip_newlines) {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        while (!eof() && peek() != '\n') get();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        get();
      } else if (c == '\n' && skip_newlines) {
        get();
      } else {
        break;
      }
    }
  }

  std::string ident() {
    std::string out;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      out.push_back(get());
    }
    return out;
  }
};

bool is_number_start(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.' ||
         c == 'I' || c == 'i' || c == 'N' || c == 'n';
}

double parse_number(Cursor& cur) {
  int start_line = cur.line, start_col = cur.col;
  std::string tok;
  while (!cur.eof()) {
    char c = cur.peek();
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-') {
      // '+'/'-' continue the token only directly after an exponent marker.
      if ((c == '+' || c == '-') && !tok.empty() &&
          !(tok.back() == 'e' || tok.back() == 'E')) {
        break;
      }
      tok.push_back(cur.get());
    } else {
      break;
    }
  }
  if (tok.empty()) cur.error("expected a number");

  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  double sign = 1.0;
  if (*first == '+') ++first;
  else if (*first == '-') { sign = -1.0; ++first; }

  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || std::isnan(value)) {
    fail(Errc::token_error, "non-numeric token '" + tok + "' at " +
                                std::to_string(start_line) + ":" + std::to_string(start_col));
  }
  return sign * value;
}

Matrix parse_matrix(Cursor& cur, const std::string& field) {
  // Caller consumed '['.
  Matrix rows;
  std::vector<double> row;
  auto flush_row = [&] {
    if (row.empty()) return;
    if (!rows.empty() && rows.front().size() != row.size()) {
      fail(Errc::ragged_matrix,
           "matrix mpc." + field + " row " + std::to_string(rows.size() + 1) + " has " +
               std::to_string(row.size()) + " columns, expected " +
               std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
    row.clear();
  };

  while (true) {
    cur.skip_blank(false);
    if (cur.eof()) cur.error("unterminated matrix mpc." + field);
    char c = cur.peek();
    if (c == ']') {
      cur.get();
      flush_row();
      break;
    }
    if (c == ';' || c == '\n') {
      cur.get();
      flush_row();
      continue;
    }
    if (!is_number_start(c)) cur.error("unexpected character '" + std::string(1, c) + "' in mpc." + field);
    row.push_back(parse_number(cur));
  }
  cur.skip_blank(true);
  if (!cur.eof() && cur.peek() == ';') cur.get();
  return rows;
}

std::string parse_quoted(Cursor& cur) {
  // Caller consumed the opening quote.
  std::string out;
  while (!cur.eof() && cur.peek() != '\'') out.push_back(cur.get());
  if (cur.eof()) cur.error("unterminated string");
  cur.get();
  cur.skip_blank(true);
  if (!cur.eof() && cur.peek() == ';') cur.get();
  return out;
}

void write_number(std::string& out, double v) {
  if (std::isinf(v)) {
    out += v > 0 ? "Inf" : "-Inf";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void write_matrix(std::string& out, const std::string& name, const Matrix& m) {
  out += "mpc." + name + " = [\n";
  for (const auto& row : m) {
    out += '\t';
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += '\t';
      write_number(out, row[j]);
    }
    out += ";\n";
  }
  out += "];\n\n";
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : m) rows.push_back(r);
  return rows;
}

}  // namespace

const char* errc_name(Errc code) noexcept { return errc_names[static_cast<int>(code)]; }

RawCase parse_case(std::string_view text) {
  Cursor cur{text};
  RawCase raw;
  bool saw_base_mva = false, saw_bus = false, saw_gen = false, saw_branch = false;

  cur.skip_blank(true);
  while (!cur.eof()) {
    std::string word = cur.ident();
    if (word.empty()) cur.error("expected 'function' or 'mpc.<field>'");

    if (word == "function") {
      // Single header line: function mpc = <name>
      cur.skip_blank(true);
      std::string lhs = cur.ident();
      cur.skip_blank(true);
      if (cur.eof() || cur.peek() != '=') cur.error("malformed function header");
      cur.get();
      cur.skip_blank(true);
      raw.name = cur.ident();
      if (lhs != "mpc" || raw.name.empty()) cur.error("malformed function header");
      cur.skip_blank(true);
      continue;
    }

    if (word != "mpc" || cur.eof() || cur.peek() != '.') {
      cur.error("unsupported statement '" + word + "'");
    }
    cur.get();  // '.'
    std::string field = cur.ident();
    if (field.empty()) cur.error("missing field name after 'mpc.'");
    cur.skip_blank(false);
    if (cur.eof() || cur.peek() != '=') cur.error("expected '=' after mpc." + field);
    cur.get();
    cur.skip_blank(false);
    if (cur.eof()) cur.error("missing value for mpc." + field);

    char c = cur.peek();
    if (c == '[') {
      cur.get();
      Matrix m = parse_matrix(cur, field);
      if (field == "bus") { raw.bus = std::move(m); saw_bus = true; }
      else if (field == "gen") { raw.gen = std::move(m); saw_gen = true; }
      else if (field == "branch") { raw.branch = std::move(m); saw_branch = true; }
      else if (field == "gencost") raw.gencost = std::move(m);
      else if (field == "dcline") raw.dcline = std::move(m);
      else raw.extra.emplace_back(field, std::move(m));
    } else if (c == '\'') {
      cur.get();
      std::string value = parse_quoted(cur);
      if (field != "version") cur.error("string value not supported for mpc." + field);
      raw.version = value;
    } else if (is_number_start(c)) {
      double v = parse_number(cur);
      cur.skip_blank(true);
      if (!cur.eof() && cur.peek() == ';') cur.get();
      if (field == "baseMVA") {
        raw.base_mva = v;
        saw_base_mva = true;
      } else {
        raw.extra.emplace_back(field, Matrix{{v}});
      }
    } else {
      cur.error("unsupported value for mpc." + field);
    }
    cur.skip_blank(true);
  }

  std::string missing;
  if (!saw_base_mva) missing += " mpc.baseMVA";
  if (!saw_bus) missing += " mpc.bus";
  if (!saw_gen) missing += " mpc.gen";
  if (!saw_branch) missing += " mpc.branch";
  if (!missing.empty()) fail(Errc::missing_section, "case is missing:" + missing);
  if (raw.bus.empty()) fail(Errc::missing_section, "mpc.bus matrix is empty");
  if (raw.base_mva <= 0) {
    fail(Errc::token_error, "mpc.baseMVA must be positive, got " + std::to_string(raw.base_mva));
  }
  return raw;
}

std::string write_case(const RawCase& raw) {
  std::string out;
  if (!raw.name.empty()) out += "function mpc = " + raw.name + "\n";
  if (!raw.version.empty()) out += "mpc.version = '" + raw.version + "';\n";
  out += "mpc.baseMVA = ";
  write_number(out, raw.base_mva);
  out += ";\n\n";
  write_matrix(out, "bus", raw.bus);
  write_matrix(out, "gen", raw.gen);
  write_matrix(out, "branch", raw.branch);
  if (!raw.gencost.empty()) write_matrix(out, "gencost", raw.gencost);
  if (raw.dcline) write_matrix(out, "dcline", *raw.dcline);
  for (const auto& [name, m] : raw.extra) write_matrix(out, name, m);
  return out;
}

nlohmann::json raw_case_to_json(const RawCase& raw) {
  nlohmann::json doc;
  doc["name"] = raw.name;
  doc["baseMVA"] = raw.base_mva;
  doc["bus"] = matrix_to_json(raw.bus);
  doc["gen"] = matrix_to_json(raw.gen);
  doc["branch"] = matrix_to_json(raw.branch);
  doc["gencost"] = matrix_to_json(raw.gencost);
  if (raw.dcline) doc["dcline"] = matrix_to_json(*raw.dcline);
  return doc;
}

}  // namespace gridopt
