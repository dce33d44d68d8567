#include "gks/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gks/error.hpp"
#include "gks/jsonlib.hpp"

namespace gks {

namespace {

using ojson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string describe(const SnippetRef& ref) {
  return ref.domain + "/" + ref.entity_id + "/" + ref.doc_id;
}

const ojson& require(const ojson& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field \"" + key + "\"");
  return *it;
}

std::string require_string(const ojson& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw ParseError(where + ": field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

Corpus parse_knowledge(const ojson& root) {
  if (!root.is_object()) throw ParseError("knowledge: top level must be an object");
  Corpus corpus;
  for (const auto& [domain, entities] : root.items()) {
    if (!entities.is_object()) throw ParseError("knowledge/" + domain + ": must be an object");
    for (const auto& [entity_id, entity] : entities.items()) {
      const std::string where = "knowledge/" + domain + "/" + entity_id;
      if (!entity.is_object()) throw ParseError(where + ": must be an object");
      EntityEntry entry;
      if (auto it = entity.find("name"); it != entity.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError(where + ": \"name\" must be a string");
        entry.name = it->get<std::string>();
      }
      const auto& docs = require(entity, "docs", where);
      if (!docs.is_object()) throw ParseError(where + ": \"docs\" must be an object");
      for (const auto& [doc_id, doc] : docs.items()) {
        const std::string doc_where = where + "/" + doc_id;
        if (!doc.is_object()) throw ParseError(doc_where + ": must be an object");
        KnowledgeSnippet snippet{domain, entity_id, doc_id, require_string(doc, "title", doc_where), ""};
        if (auto it = doc.find("body"); it != doc.end() && !it->is_null()) {
          if (!it->is_string()) throw ParseError(doc_where + ": \"body\" must be a string");
          snippet.body = it->get<std::string>();
        }
        entry.docs.push_back(std::move(snippet));
      }
      EntityKey key{domain, entity_id};
      corpus.entity_order.push_back(key);
      corpus.snippets.emplace(std::move(key), std::move(entry));
    }
  }
  return corpus;
}

std::vector<DialogInstance> parse_logs(const ojson& root) {
  if (!root.is_array()) throw ParseError("logs: top level must be an array");
  std::vector<DialogInstance> dialogs;
  dialogs.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = "logs[" + std::to_string(i) + "]";
    const auto& turns = root[i];
    if (!turns.is_array()) throw ParseError(where + ": dialog must be an array of turns");
    DialogInstance dialog;
    dialog.id = std::to_string(i);
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const std::string turn_where = where + "[" + std::to_string(t) + "]";
      if (!turns[t].is_object()) throw ParseError(turn_where + ": turn must be an object");
      const std::string speaker = require_string(turns[t], "speaker", turn_where);
      DialogTurn turn;
      if (speaker == "U") {
        turn.speaker = Speaker::User;
      } else if (speaker == "S") {
        turn.speaker = Speaker::Sys;
      } else {
        throw ParseError(turn_where + ": speaker must be \"U\" or \"S\", got \"" + speaker + "\"");
      }
      turn.text = require_string(turns[t], "text", turn_where);
      dialog.turns.push_back(std::move(turn));
    }
    dialogs.push_back(std::move(dialog));
  }
  return dialogs;
}

void apply_labels(const ojson& root, std::vector<DialogInstance>& dialogs) {
  if (!root.is_array()) throw ParseError("labels: top level must be an array");
  if (root.size() != dialogs.size()) {
    throw ValidationError("labels: " + std::to_string(root.size()) + " entries for " +
                          std::to_string(dialogs.size()) + " dialogs");
  }
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = "labels[" + std::to_string(i) + "]";
    const auto& label = root[i];
    if (!label.is_object()) throw ParseError(where + ": must be an object");
    const auto& target = require(label, "target", where);
    if (!target.is_boolean()) throw ParseError(where + ": \"target\" must be a boolean");
    auto& dialog = dialogs[i];
    dialog.target = target.get<bool>();
    if (auto it = label.find("knowledge"); it != label.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(where + ": \"knowledge\" must be an array");
      if (it->size() > 1) {
        throw ValidationError("dialog " + dialog.id + ": multiple golden snippets are not supported");
      }
      if (it->size() == 1) {
        const auto& k = (*it)[0];
        if (!k.is_object()) throw ParseError(where + ": knowledge entry must be an object");
        auto field = [&](const char* name) -> std::string {
          const auto& v = require(k, name, where + ".knowledge[0]");
          if (v.is_string()) return v.get<std::string>();
          if (v.is_number_integer()) return std::to_string(v.get<long long>());
          throw ParseError(where + ".knowledge[0]: \"" + name + "\" must be a string or integer");
        };
        dialog.golden = SnippetRef{field("domain"), field("entity_id"), field("doc_id")};
      }
    }
    if (auto it = label.find("response"); it != label.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(where + ": \"response\" must be a string");
      dialog.response = it->get<std::string>();
    }
  }
}

// Parses JSON, rejecting duplicate object keys and reporting errors as line:column.
ojson parse_json(const std::string& text, const std::string& what) {
  std::vector<std::set<std::string>> open_objects;
  std::string duplicate;
  ojson::parser_callback_t cb = [&](int /*depth*/, ojson::parse_event_t event, ojson& parsed) {
    switch (event) {
      case ojson::parse_event_t::object_start:
        open_objects.emplace_back();
        break;
      case ojson::parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case ojson::parse_event_t::key:
        if (!open_objects.empty() && !open_objects.back().insert(parsed.get<std::string>()).second &&
            duplicate.empty()) {
          duplicate = parsed.get<std::string>();
        }
        break;
      default:
        break;
    }
    return true;
  };
  try {
    ojson root = ojson::parse(text, cb);
    if (!duplicate.empty()) {
      throw ValidationError(what + ": duplicate key \"" + duplicate + "\"");
    }
    return root;
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(what + ":" + std::to_string(line) + ":" + std::to_string(column) +
                     ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace

std::size_t Corpus::snippet_count() const {
  std::size_t n = 0;
  for (const auto& [key, entry] : snippets) n += entry.docs.size();
  return n;
}

const KnowledgeSnippet* Corpus::find(const SnippetRef& ref) const {
  auto it = snippets.find(ref.entity());
  if (it == snippets.end()) return nullptr;
  for (const auto& s : it->second.docs) {
    if (s.doc_id == ref.doc_id) return &s;
  }
  return nullptr;
}

const DialogInstance* Corpus::find_dialog(const std::string& id) const {
  for (const auto& d : dialogs) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

void validate_corpus(const Corpus& corpus) {
  if (corpus.entity_order.size() != corpus.snippets.size()) {
    throw ValidationError("entity order out of sync with snippet map");
  }
  for (const auto& key : corpus.entity_order) {
    auto it = corpus.snippets.find(key);
    if (it == corpus.snippets.end()) {
      throw ValidationError("entity " + key.domain + "/" + key.entity_id + " missing");
    }
    std::set<std::string> seen;
    for (const auto& s : it->second.docs) {
      if (s.domain != key.domain || s.entity_id != key.entity_id) {
        throw ValidationError("snippet " + describe(s.ref()) + " filed under the wrong entity");
      }
      if (!seen.insert(s.doc_id).second) {
        throw ValidationError("duplicate snippet key " + describe(s.ref()));
      }
      if (trim(s.title).empty()) {
        throw ValidationError("snippet " + describe(s.ref()) + " has an empty title");
      }
    }
  }
  for (const auto& dialog : corpus.dialogs) {
    if (dialog.turns.empty()) throw ValidationError("dialog " + dialog.id + " has no turns");
    for (const auto& turn : dialog.turns) {
      if (trim(turn.text).empty()) {
        throw ValidationError("dialog " + dialog.id + " has an empty turn");
      }
    }
    if (dialog.current_turn().speaker != Speaker::User) {
      throw ValidationError("dialog " + dialog.id + " does not end with a User turn");
    }
    if (corpus.labeled && dialog.target != dialog.golden.has_value()) {
      throw ValidationError("dialog " + dialog.id +
                            (dialog.target ? ": target dialog without golden knowledge"
                                           : ": golden knowledge on a non-target dialog"));
    }
    if (dialog.golden && corpus.find(*dialog.golden) == nullptr) {
      throw ValidationError("dialog " + dialog.id + ": golden snippet " + describe(*dialog.golden) +
                            " does not exist");
    }
  }
}

Corpus parse_corpus(const std::string& knowledge_json, const std::string& logs_json,
                    const std::optional<std::string>& labels_json) {
  Corpus corpus = parse_knowledge(parse_json(knowledge_json, "knowledge"));
  corpus.dialogs = parse_logs(parse_json(logs_json, "logs"));
  if (labels_json) {
    apply_labels(parse_json(*labels_json, "labels"), corpus.dialogs);
    corpus.labeled = true;
  }
  validate_corpus(corpus);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& knowledge_path, const std::filesystem::path& logs_path,
                   const std::optional<std::filesystem::path>& labels_path) {
  std::optional<std::string> labels;
  if (labels_path) labels = read_file(*labels_path);
  return parse_corpus(read_file(knowledge_path), read_file(logs_path), labels);
}

CorpusDocuments serialize_corpus(const Corpus& corpus) {
  ojson knowledge = ojson::object();
  for (const auto& key : corpus.entity_order) {
    const auto& entry = corpus.snippets.at(key);
    ojson docs = ojson::object();
    for (const auto& s : entry.docs) docs[s.doc_id] = ojson{{"title", s.title}, {"body", s.body}};
    knowledge[key.domain][key.entity_id] = ojson{{"name", entry.name}, {"docs", std::move(docs)}};
  }
  ojson logs = ojson::array();
  ojson labels = ojson::array();
  for (const auto& dialog : corpus.dialogs) {
    ojson turns = ojson::array();
    for (const auto& t : dialog.turns) {
      turns.push_back(ojson{{"speaker", t.speaker == Speaker::User ? "U" : "S"}, {"text", t.text}});
    }
    logs.push_back(std::move(turns));
    ojson label{{"target", dialog.target}};
    if (dialog.golden) {
      label["knowledge"] = ojson::array(
          {ojson{{"domain", dialog.golden->domain},
                 {"entity_id", dialog.golden->entity_id},
                 {"doc_id", dialog.golden->doc_id}}});
    }
    if (dialog.response) label["response"] = *dialog.response;
    labels.push_back(std::move(label));
  }
  CorpusDocuments out;
  out.knowledge = knowledge.dump(2) + "\n";
  out.logs = logs.dump(2) + "\n";
  if (corpus.labeled) out.labels = labels.dump(2) + "\n";
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto docs = serialize_corpus(corpus);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + (dir / name).string());
    out << text;
    if (!out) throw InvalidArgument("failed writing " + (dir / name).string());
  };
  write("knowledge.json", docs.knowledge);
  write("logs.json", docs.logs);
  if (corpus.labeled) write("labels.json", docs.labels);
}

const std::vector<KnowledgeSnippet>& candidate_set(const Corpus& corpus, const EntityKey& entity) {
  auto it = corpus.snippets.find(entity);
  if (it == corpus.snippets.end() || it->second.docs.empty()) {
    throw InvalidArgument("unknown entity " + entity.domain + "/" + entity.entity_id);
  }
  return it->second.docs;
}

const std::vector<KnowledgeSnippet>& candidate_set(const Corpus& corpus, const DialogInstance& /*dialog*/,
                                                   const EntityKey& entity) {
  return candidate_set(corpus, entity);
}

// ---------------------------------------------------------------------------
// Synthetic corpora

std::string synonym_of(const std::string& token) {
  if (token.size() > 1 && token[0] == 'w') return "p" + token.substr(1);
  return token;
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

class SynthGenerator {
 public:
  SynthGenerator(std::uint64_t seed, const SynthParams& params) : rng_(seed), params_(params) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string content(std::size_t i) const { return "w" + std::to_string(i); }

  // k distinct content tokens avoiding `exclude`.
  std::vector<std::string> draw(std::size_t k, const std::set<std::string>& exclude) {
    std::vector<std::string> out;
    std::set<std::string> used(exclude);
    while (out.size() < k) {
      auto t = content(index(params_.vocab_size));
      if (used.insert(t).second) out.push_back(std::move(t));
    }
    return out;
  }

  std::vector<std::string> answer_tokens(std::size_t k) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back("a" + std::to_string(index(params_.vocab_size)));
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  SynthParams params_;
};

constexpr std::size_t kTitleTokens = 4;

std::size_t overlap(const std::vector<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& t : a) n += b.count(t);
  return n;
}

}  // namespace

Corpus synth_corpus(std::uint64_t seed, const SynthParams& params) {
  if (params.n_candidates < 2) throw InvalidArgument("synth: n_candidates must be >= 2");
  if (params.vocab_size < 4 * params.n_candidates) {
    throw InvalidArgument("synth: vocab_size must be >= 4 * n_candidates");
  }
  if (!(params.detect_marker_rate >= 0.0 && params.detect_marker_rate <= 1.0)) {
    throw InvalidArgument("synth: detect_marker_rate must lie in [0, 1]");
  }
  SynthGenerator gen(seed, params);
  Corpus corpus;
  corpus.labeled = true;
  static const char* kDomains[] = {"hotel", "restaurant", "attraction", "train", "taxi"};

  // Exact count of chit-chat dialogs, positions shuffled.
  const auto n_chat = static_cast<std::size_t>(params.detect_marker_rate * static_cast<double>(params.n_dialogs) + 0.5);
  std::vector<bool> is_chat(params.n_dialogs, false);
  std::fill(is_chat.begin(), is_chat.begin() + static_cast<std::ptrdiff_t>(n_chat), true);
  std::shuffle(is_chat.begin(), is_chat.end(), gen.rng());

  for (std::size_t d = 0; d < params.n_dialogs; ++d) {
    const std::string domain = kDomains[d % std::size(kDomains)];
    const std::string entity_id = std::to_string(d);
    EntityKey key{domain, entity_id};

    DialogInstance dialog;
    dialog.id = std::to_string(d);
    const std::size_t history_pairs = gen.index(3);
    for (std::size_t h = 0; h < history_pairs; ++h) {
      dialog.turns.push_back({Speaker::User, join(gen.draw(3 + gen.index(3), {}))});
      dialog.turns.push_back({Speaker::Sys, join(gen.answer_tokens(3 + gen.index(3)))});
    }

    // Golden title and the query that shares 2 or 3 of its tokens.
    const auto golden_title = gen.draw(kTitleTokens, {});
    const std::size_t shared = 2 + gen.index(2);
    std::vector<std::string> query(golden_title.begin(), golden_title.begin() + static_cast<std::ptrdiff_t>(shared));
    {
      std::set<std::string> exclude(golden_title.begin(), golden_title.end());
      for (auto& t : gen.draw(2, exclude)) query.push_back(std::move(t));
    }
    std::shuffle(query.begin(), query.end(), gen.rng());
    if (params.overlap_mode == OverlapMode::Paraphrase) {
      std::set<std::string> golden_set(golden_title.begin(), golden_title.end());
      for (auto& t : query) {
        if (golden_set.count(t)) t = synonym_of(t);
      }
    }
    std::set<std::string> query_set(query.begin(), query.end());
    // Distractors in paraphrase mode must also avoid the synonyms' literal forms.
    std::set<std::string> guard(query_set);
    if (params.overlap_mode == OverlapMode::Paraphrase) guard.insert(golden_title.begin(), golden_title.end());

    const std::size_t golden_index = gen.index(params.n_candidates);
    EntityEntry entry;
    entry.name = domain + " entity " + entity_id;
    for (std::size_t c = 0; c < params.n_candidates; ++c) {
      std::vector<std::string> title;
      if (c == golden_index) {
        title = golden_title;
      } else {
        do {
          title = gen.draw(kTitleTokens, {});
        } while (overlap(title, guard) >= 2);
      }
      entry.docs.push_back({domain, entity_id, std::to_string(c), join(title), join(gen.answer_tokens(3))});
    }

    if (is_chat[d]) {
      auto chat = gen.draw(3 + gen.index(3), {});
      chat.insert(chat.begin() + static_cast<std::ptrdiff_t>(gen.index(chat.size() + 1)), kChitChatMarker);
      dialog.turns.push_back({Speaker::User, join(chat)});
      dialog.target = false;
    } else {
      dialog.turns.push_back({Speaker::User, join(query)});
      dialog.target = true;
      dialog.golden = entry.docs[golden_index].ref();
      dialog.response = entry.docs[golden_index].body;
    }

    corpus.entity_order.push_back(key);
    corpus.snippets.emplace(std::move(key), std::move(entry));
    corpus.dialogs.push_back(std::move(dialog));
  }
  // Group by domain in first-appearance order, matching how the knowledge file nests entities.
  std::vector<std::string> domain_order;
  for (const auto& key : corpus.entity_order) {
    if (std::find(domain_order.begin(), domain_order.end(), key.domain) == domain_order.end()) {
      domain_order.push_back(key.domain);
    }
  }
  std::stable_sort(corpus.entity_order.begin(), corpus.entity_order.end(), [&](const EntityKey& a, const EntityKey& b) {
    return std::find(domain_order.begin(), domain_order.end(), a.domain) <
           std::find(domain_order.begin(), domain_order.end(), b.domain);
  });
  validate_corpus(corpus);
  return corpus;
}

}  // namespace gks
