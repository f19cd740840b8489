#include "tagtrain/lexdb.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace tagtrain {

namespace {

constexpr std::array<std::string_view, 45> kLexnames = {
    "adj.all",        "adj.pert",        "adv.all",          "noun.Tops",
    "noun.act",       "noun.animal",     "noun.artifact",    "noun.attribute",
    "noun.body",      "noun.cognition",  "noun.communication", "noun.event",
    "noun.feeling",   "noun.food",       "noun.group",       "noun.location",
    "noun.motive",    "noun.object",     "noun.person",      "noun.phenomenon",
    "noun.plant",     "noun.possession", "noun.process",     "noun.quantity",
    "noun.relation",  "noun.shape",      "noun.state",       "noun.substance",
    "noun.time",      "verb.body",       "verb.change",      "verb.cognition",
    "verb.communication", "verb.competition", "verb.consumption", "verb.contact",
    "verb.creation",  "verb.emotion",    "verb.motion",      "verb.perception",
    "verb.possession", "verb.social",    "verb.stative",     "verb.weather",
    "adj.ppl"};

// Detachment rules per part of speech: (suffix, replacement), tried in order.
using Rule = std::pair<std::string_view, std::string_view>;

constexpr std::array<Rule, 8> kNounRules = {{{"s", ""},
                                             {"ses", "s"},
                                             {"xes", "x"},
                                             {"zes", "z"},
                                             {"ches", "ch"},
                                             {"shes", "sh"},
                                             {"men", "man"},
                                             {"ies", "y"}}};
constexpr std::array<Rule, 8> kVerbRules = {{{"s", ""},
                                             {"ies", "y"},
                                             {"es", "e"},
                                             {"es", ""},
                                             {"ed", "e"},
                                             {"ed", ""},
                                             {"ing", "e"},
                                             {"ing", ""}}};
constexpr std::array<Rule, 4> kAdjRules = {{{"er", ""},
                                            {"est", ""},
                                            {"er", "e"},
                                            {"est", "e"}}};

std::vector<Rule> rules_for(Pos pos) {
  switch (pos) {
    case Pos::Noun: return {kNounRules.begin(), kNounRules.end()};
    case Pos::Verb: return {kVerbRules.begin(), kVerbRules.end()};
    case Pos::Adj: return {kAdjRules.begin(), kAdjRules.end()};
    case Pos::Adv: return {};
  }
  return {};
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string normalize_word(std::string word) {
  word = lowercase(std::move(word));
  std::replace(word.begin(), word.end(), ' ', '_');
  return word;
}

[[noreturn]] void parse_fail(const fs::path& file, std::size_t line_no,
                             const std::string& what) {
  std::ostringstream os;
  os << file.filename().string() << ":" << line_no << ": " << what;
  throw LexDbError(os.str());
}

struct TokenReader {
  std::istringstream in;
  const fs::path& file;
  std::size_t line_no;

  TokenReader(const std::string& line, const fs::path& f, std::size_t n)
      : in(line), file(f), line_no(n) {}

  std::string next(const char* what) {
    std::string tok;
    if (!(in >> tok)) parse_fail(file, line_no, std::string("truncated record, expected ") + what);
    return tok;
  }

  long next_int(const char* what, int base = 10) {
    const std::string tok = next(what);
    long value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value, base);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      parse_fail(file, line_no, std::string("bad number for ") + what + ": '" + tok + "'");
    }
    return value;
  }
};

std::string strip_adj_marker(std::string word) {
  // Adjective lemmas can carry a syntactic marker, e.g. "galore(ip)".
  const auto open = word.find('(');
  if (open != std::string::npos && word.back() == ')') word.resize(open);
  return word;
}

std::string data_filename(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "data.noun";
    case Pos::Verb: return "data.verb";
    case Pos::Adj: return "data.adj";
    case Pos::Adv: return "data.adv";
  }
  return {};
}

std::string index_filename(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "index.noun";
    case Pos::Verb: return "index.verb";
    case Pos::Adj: return "index.adj";
    case Pos::Adv: return "index.adv";
  }
  return {};
}

std::string exc_filename(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "noun.exc";
    case Pos::Verb: return "verb.exc";
    case Pos::Adj: return "adj.exc";
    case Pos::Adv: return "adv.exc";
  }
  return {};
}

bool is_header_line(const std::string& line) {
  return !line.empty() && line[0] == ' ';
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LexDbError("missing file: " + path.string());
  return in;
}

}  // namespace

char pos_tag(Pos pos) {
  switch (pos) {
    case Pos::Noun: return 'n';
    case Pos::Verb: return 'v';
    case Pos::Adj: return 'a';
    case Pos::Adv: return 'r';
  }
  return '?';
}

std::optional<Pos> pos_from_tag(char tag) {
  switch (tag) {
    case 'n': return Pos::Noun;
    case 'v': return Pos::Verb;
    case 'a':
    case 's': return Pos::Adj;
    case 'r': return Pos::Adv;
    default: return std::nullopt;
  }
}

std::string SynsetId::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08u-%c", offset, pos_tag(pos));
  return buf;
}

std::optional<SynsetId> SynsetId::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash + 2 != text.size()) return std::nullopt;
  const auto pos = pos_from_tag(text[dash + 1]);
  if (!pos) return std::nullopt;
  std::uint32_t offset = 0;
  const auto res = std::from_chars(text.data(), text.data() + dash, offset);
  if (res.ec != std::errc() || res.ptr != text.data() + dash) return std::nullopt;
  return SynsetId{offset, *pos};
}

std::string_view lexname_from_filenum(int filenum) {
  if (filenum < 0 || filenum >= static_cast<int>(kLexnames.size())) {
    throw LexDbError("lexicographer file number out of range: " + std::to_string(filenum));
  }
  return kLexnames[static_cast<std::size_t>(filenum)];
}

const Synset& LexDb::synset(SynsetId id) const {
  const Synset* s = find(id);
  if (!s) throw LexDbError("unknown synset id: " + id.to_string());
  return *s;
}

const Synset* LexDb::find(SynsetId id) const {
  const auto it = synsets_.find(id);
  return it == synsets_.end() ? nullptr : &it->second;
}

bool LexDb::is_indexed(const std::string& lemma, Pos pos) const {
  return index_.count({lemma, pos}) > 0;
}

std::vector<SynsetId> LexDb::index_entry(const std::string& lemma, Pos pos) const {
  const auto it = index_.find({lemma, pos});
  if (it == index_.end()) return {};
  return it->second;
}

std::vector<SynsetId> LexDb::synsets_of(const std::string& word) const {
  return index_entry(normalize_word(word), Pos::Noun);
}

std::vector<std::string> LexDb::morphy_all(const std::string& word, Pos pos) const {
  const std::string form = normalize_word(word);
  if (form.empty()) return {};

  const auto rules = rules_for(pos);
  const auto apply_rules = [&](const std::vector<std::string>& forms) {
    std::vector<std::string> out;
    for (const auto& f : forms) {
      for (const auto& [suffix, repl] : rules) {
        if (f.size() >= suffix.size() &&
            f.compare(f.size() - suffix.size(), suffix.size(), suffix) == 0) {
          out.push_back(f.substr(0, f.size() - suffix.size()) + std::string(repl));
        }
      }
    }
    return out;
  };
  const auto filter_indexed = [&](const std::vector<std::string>& forms) {
    std::vector<std::string> out;
    for (const auto& f : forms) {
      if (!is_indexed(f, pos)) continue;
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
    return out;
  };

  const auto& exc = exceptions_[static_cast<std::size_t>(pos)];
  if (const auto it = exc.find(form); it != exc.end()) {
    std::vector<std::string> cands{form};
    cands.insert(cands.end(), it->second.begin(), it->second.end());
    return filter_indexed(cands);
  }

  std::vector<std::string> forms = apply_rules({form});
  std::vector<std::string> cands{form};
  cands.insert(cands.end(), forms.begin(), forms.end());
  auto results = filter_indexed(cands);
  if (!results.empty()) return results;

  while (!forms.empty()) {
    forms = apply_rules(forms);
    results = filter_indexed(forms);
    if (!results.empty()) return results;
  }
  return {};
}

std::optional<std::string> LexDb::morphy(const std::string& word, Pos pos) const {
  auto all = morphy_all(word, pos);
  if (all.empty()) return std::nullopt;
  return all.front();
}

std::optional<std::string> LexDb::morphy(const std::string& word) const {
  for (Pos pos : kAllPos) {
    if (auto base = morphy(word, pos)) return base;
  }
  return std::nullopt;
}

std::size_t LexDb::dense_index(SynsetId id) const {
  const auto it = dense_.find(id);
  if (it == dense_.end()) throw LexDbError("unknown synset id: " + id.to_string());
  return it->second;
}

std::vector<int> LexDb::hypernym_graph_distances(SynsetId from) const {
  const std::size_t start = dense_index(from);
  const Pos pos = by_dense_[start].pos;
  const std::size_t virtual_node = by_dense_.size();  // one shared virtual slot

  std::vector<int> dist(by_dense_.size() + 1, -1);
  std::deque<std::size_t> queue;
  dist[start] = 0;
  queue.push_back(start);

  const auto& roots = roots_[static_cast<std::size_t>(pos)];
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    const int du = dist[u];
    const auto visit = [&](std::size_t v) {
      if (dist[v] == -1) {
        dist[v] = du + 1;
        queue.push_back(v);
      }
    };
    if (u == virtual_node) {
      for (std::size_t r : roots) visit(r);
      continue;
    }
    for (std::size_t v : up_[u]) visit(v);
    for (std::size_t v : down_[u]) visit(v);
    if (up_[u].empty()) visit(virtual_node);  // root: edge to the virtual root
  }
  dist.pop_back();
  return dist;
}

double LexDb::path_similarity(SynsetId a, SynsetId b) const {
  const Synset& sa = synset(a);
  const Synset& sb = synset(b);
  if (sa.id.pos != sb.id.pos) {
    throw LexDbError("path_similarity across parts of speech: " + a.to_string() +
                     " vs " + b.to_string());
  }
  if (a == b) return 1.0;
  const auto dist = hypernym_graph_distances(a);
  const int d = dist[dense_index(b)];
  if (d < 0) throw LexDbError("no path between " + a.to_string() + " and " + b.to_string());
  return 1.0 / (1.0 + static_cast<double>(d));
}

std::size_t LexDb::synset_count(Pos pos) const {
  std::size_t n = 0;
  for (const auto& [id, s] : synsets_) {
    if (id.pos == pos) ++n;
  }
  return n;
}

void LexDb::link_and_check() {
  dense_.clear();
  by_dense_.clear();
  by_dense_.reserve(synsets_.size());
  for (const auto& [id, s] : synsets_) {
    dense_[id] = by_dense_.size();
    by_dense_.push_back(id);
  }
  up_.assign(by_dense_.size(), {});
  down_.assign(by_dense_.size(), {});
  for (auto& r : roots_) r.clear();

  for (const auto& [id, s] : synsets_) {
    const std::size_t u = dense_.at(id);
    for (const SynsetId& h : s.hypernyms) {
      const auto it = dense_.find(h);
      if (it == dense_.end()) {
        throw LexDbError("dangling hypernym " + h.to_string() + " referenced from " +
                         id.to_string());
      }
      up_[u].push_back(it->second);
      down_[it->second].push_back(u);
    }
    if (s.hypernyms.empty()) {
      roots_[static_cast<std::size_t>(id.pos)].push_back(u);
    }
  }

  for (const auto& [key, ids] : index_) {
    for (const SynsetId& id : ids) {
      if (!synsets_.count(id)) {
        throw LexDbError("index entry '" + key.first + "' references missing synset " +
                         id.to_string());
      }
    }
  }
}

LexDb load_database(const std::string& directory) {
  const fs::path dir(directory);
  LexDb db;

  const auto load_data = [&](Pos pos, const fs::path& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || is_header_line(line)) continue;
      TokenReader tok(line, path, line_no);

      Synset syn;
      const long offset = tok.next_int("synset offset");
      const long filenum = tok.next_int("lex_filenum");
      const std::string ss_type = tok.next("ss_type");
      const auto ss_pos = ss_type.size() == 1 ? pos_from_tag(ss_type[0]) : std::nullopt;
      if (!ss_pos || *ss_pos != pos) {
        parse_fail(path, line_no, "unexpected ss_type '" + ss_type + "'");
      }
      syn.id = SynsetId{static_cast<std::uint32_t>(offset), pos};
      try {
        syn.lexname = std::string(lexname_from_filenum(static_cast<int>(filenum)));
      } catch (const LexDbError& e) {
        parse_fail(path, line_no, e.what());
      }

      const long w_cnt = tok.next_int("word count", 16);
      if (w_cnt <= 0) parse_fail(path, line_no, "synset with no words");
      for (long w = 0; w < w_cnt; ++w) {
        std::string word = strip_adj_marker(tok.next("word"));
        tok.next("lex_id");
        syn.lemmas.push_back(lowercase(std::move(word)));
      }

      const long p_cnt = tok.next_int("pointer count");
      for (long p = 0; p < p_cnt; ++p) {
        const std::string symbol = tok.next("pointer symbol");
        const long target = tok.next_int("pointer offset");
        const std::string ptr_pos = tok.next("pointer pos");
        tok.next("pointer source/target");
        const auto tp = ptr_pos.size() == 1 ? pos_from_tag(ptr_pos[0]) : std::nullopt;
        if (!tp) parse_fail(path, line_no, "bad pointer pos '" + ptr_pos + "'");
        if (symbol == "@" || symbol == "@i") {
          syn.hypernyms.push_back(SynsetId{static_cast<std::uint32_t>(target), *tp});
        }
      }

      if (pos == Pos::Verb) {
        const long f_cnt = tok.next_int("frame count");
        for (long f = 0; f < f_cnt; ++f) {
          tok.next("frame marker");
          tok.next_int("frame number");
          tok.next_int("frame word", 16);
        }
      }

      if (db.synsets_.count(syn.id)) {
        parse_fail(path, line_no, "duplicate synset offset " + syn.id.to_string());
      }
      db.synsets_.emplace(syn.id, std::move(syn));
    }
  };

  const auto load_index = [&](Pos pos, const fs::path& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || is_header_line(line)) continue;
      TokenReader tok(line, path, line_no);

      const std::string lemma = lowercase(tok.next("lemma"));
      const std::string pos_field = tok.next("pos");
      const long synset_cnt = tok.next_int("synset count");
      const long p_cnt = tok.next_int("pointer count");
      for (long p = 0; p < p_cnt; ++p) tok.next("pointer symbol");
      tok.next_int("sense count");
      tok.next_int("tagsense count");
      if (synset_cnt <= 0) parse_fail(path, line_no, "index entry with no senses");

      std::vector<SynsetId> ids;
      ids.reserve(static_cast<std::size_t>(synset_cnt));
      for (long s = 0; s < synset_cnt; ++s) {
        const long offset = tok.next_int("synset offset");
        ids.push_back(SynsetId{static_cast<std::uint32_t>(offset), pos});
      }
      auto& slot = db.index_[{lemma, pos}];
      if (!slot.empty()) parse_fail(path, line_no, "duplicate index entry '" + lemma + "'");
      slot = std::move(ids);
      (void)pos_field;
    }
  };

  const auto load_exc = [&](Pos pos, const fs::path& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    auto& table = db.exceptions_[static_cast<std::size_t>(pos)];
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string inflected;
      ss >> inflected;
      std::vector<std::string> bases;
      std::string base;
      while (ss >> base) bases.push_back(lowercase(base));
      if (inflected.empty() || bases.empty()) {
        parse_fail(path, line_no, "exception entry needs an inflected form and a base");
      }
      auto& slot = table[lowercase(inflected)];
      slot.insert(slot.end(), bases.begin(), bases.end());
    }
  };

  // Nouns are required; the other parts of speech are loaded when present.
  load_index(Pos::Noun, dir / index_filename(Pos::Noun));
  load_data(Pos::Noun, dir / data_filename(Pos::Noun));
  load_exc(Pos::Noun, dir / exc_filename(Pos::Noun));
  for (Pos pos : {Pos::Verb, Pos::Adj, Pos::Adv}) {
    const fs::path index_path = dir / index_filename(pos);
    const fs::path data_path = dir / data_filename(pos);
    const fs::path exc_path = dir / exc_filename(pos);
    if (fs::exists(index_path) || fs::exists(data_path)) {
      load_index(pos, index_path);
      load_data(pos, data_path);
    }
    if (fs::exists(exc_path)) load_exc(pos, exc_path);
  }

  db.link_and_check();
  return db;
}

}  // namespace tagtrain
