#include "cranimem/offline_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cranimem/text.hpp"

namespace cranimem {

namespace {

using nlohmann::json;

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "the",  "of",    "in",   "on",    "at",   "to",   "for",  "and",
      "or",   "is",   "was",  "are",   "were", "be",    "by",   "with", "as",   "it",
      "its",  "that", "this", "which", "who",  "whom",  "what", "when", "where", "how",
      "did",  "do",   "does", "from",  "has",  "have",  "had",  "he",   "she",  "they",
      "his",  "her",  "their", "i",    "you",  "we",    "not",  "but",  "if",   "so"};
  return words;
}

const std::set<std::string>& capitalized_function_words() {
  static const std::set<std::string> words = {
      "The", "A", "An", "In", "On", "At", "It", "He", "She", "They", "This", "That", "These",
      "Those", "What", "Who", "Whom", "Which", "When", "Where", "Why", "How", "Is", "Was", "Are",
      "Were", "Did", "Do", "Does", "I", "We", "You", "My", "Our", "Your", "His", "Her", "If",
      "And", "But", "Or", "Of", "For", "To", "By", "With", "As", "From", "Please", "Hi", "Hello",
      "Yesterday", "Today", "Tomorrow", "Tonight", "Now", "Then", "Also", "There", "Here", "So",
      "After", "Before", "Because", "Yes", "No"};
  return words;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords().count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

struct Run {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
};

std::vector<Run> runs_with_offsets(const std::string& text) {
  std::vector<Run> runs;
  std::optional<Run> current;
  auto close = [&] {
    if (current) runs.push_back(*current);
    current.reset();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word(text.data() + i, j - i);
    std::size_t b = 0;
    std::size_t e = word.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(word[e - 1]))) --e;
    std::string core(word.substr(b, e - b));
    if (core.size() > 2 && (core.ends_with("'s") || core.ends_with("’s"))) core.resize(core.size() - 2);
    const bool leading_break = b > 0;
    const bool trailing_break = e < word.size();
    const bool capitalized = !core.empty() &&
                             (std::isupper(static_cast<unsigned char>(core[0])) ||
                              std::all_of(core.begin(), core.end(),
                                          [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) &&
                             !capitalized_function_words().count(core);
    if (leading_break) close();
    if (capitalized) {
      if (!current) current = Run{core, i + b, i + b + core.size()};
      else {
        current->text += " " + core;
        current->end = i + b + core.size();
      }
      if (trailing_break) close();
    } else {
      close();
    }
    i = j;
  }
  close();
  return runs;
}

bool looks_like_date(const std::string& s) {
  static const std::set<std::string> names = {
      "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
      "january", "february", "march", "april", "may", "june", "july", "august",
      "september", "october", "november", "december"};
  for (const auto& tok : split(normalize_name(s), ' ')) {
    if (names.count(tok)) return true;
    if (tok.size() == 4 && std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return true;
  }
  return false;
}

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

json scores_json(const std::string& text) {
  auto entities = capitalized_runs(text);
  const double n = static_cast<double>(std::min<std::size_t>(entities.size(), 4));
  const double importance = std::min(1.0, 0.4 + 0.15 * n + (has_digit(text) ? 0.1 : 0.0));
  const double surprise = std::min(1.0, 0.3 + 0.1 * n);
  const double emotion = std::min(1.0, 0.1 + 0.2 * static_cast<double>(std::count(text.begin(), text.end(), '!')));
  return {{"importance", importance}, {"surprise", surprise}, {"emotion", emotion}, {"entities", entities}};
}

std::string cortex_json(const std::string& text) {
  auto lower = normalize_name(text);
  json j = scores_json(text);
  std::string category;
  static const std::vector<std::string> commands = {"/", "run ", "stop", "delete ", "show ", "list ", "save", "reset"};
  static const std::vector<std::string> goal_changes = {"new goal", "goal:", "switch goal", "change goal"};
  if (std::any_of(commands.begin(), commands.end(), [&](const auto& p) { return lower.starts_with(p); })) {
    category = "command";
  } else if (std::any_of(goal_changes.begin(), goal_changes.end(), [&](const auto& p) { return lower.starts_with(p); })) {
    category = "goal_change";
  } else if (!j["entities"].empty() || has_digit(text)) {
    category = "relevant_context";
  } else {
    category = "noise";
  }
  j["is_noise"] = category == "noise";
  j["category"] = category;
  j["reason"] = "offline heuristic";
  return j.dump();
}

std::string extraction_json(const std::string& text) {
  auto runs = runs_with_offsets(text);
  json entities = json::array();
  json relations = json::array();
  std::set<std::string> seen;
  for (const auto& r : runs) {
    if (!seen.insert(normalize_name(r.text)).second) continue;
    entities.push_back({{"type", looks_like_date(r.text) ? "Date" : "Other"}, {"name", r.text}});
  }
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    if (normalize_name(runs[i].text) == normalize_name(runs[i + 1].text)) continue;
    auto between = content_tokens(std::string_view(text).substr(runs[i].end, runs[i + 1].begin - runs[i].end));
    if (between.size() > 3) between.resize(3);
    std::string relation;
    for (const auto& t : between) relation += (relation.empty() ? "" : "_") + t;
    if (relation.empty()) relation = "related_to";
    relations.push_back({{"source", runs[i].text}, {"relation", relation}, {"target", runs[i + 1].text}});
  }
  return json{{"entities", entities}, {"relations", relations}}.dump();
}

std::string section(const std::string& prompt, const std::string& start, const std::string& stop) {
  auto b = prompt.find(start);
  if (b == std::string::npos) return {};
  b += start.size();
  auto e = prompt.find(stop, b);
  return prompt.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

// Crude plural/3rd-person folding so "use" meets "uses".
std::string fold_suffix(std::string t) {
  if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') t.pop_back();
  return t;
}

std::string reasoning_answer(const ChatRequest& request) {
  const std::string context = section(request.user, "CONTEXT:\n", "\n\nUSER INPUT:");
  const std::string question = request.subject;
  std::set<std::string> q_set;
  for (const auto& t : content_tokens(question)) q_set.insert(fold_suffix(t));
  std::set<std::string> q_entities;
  for (const auto& e : capitalized_runs(question)) q_entities.insert(normalize_name(e));

  std::string best;
  std::size_t best_overlap = 0;
  std::istringstream lines(context);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.starts_with("## ")) continue;
    std::size_t overlap = 0;
    for (const auto& t : content_tokens(line)) overlap += q_set.count(fold_suffix(t));
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = line;
    }
  }
  if (best.empty()) return "unknown";
  for (const auto& e : capitalized_runs(best)) {
    if (!q_entities.count(normalize_name(e))) return e;
  }
  return "unknown";
}

}  // namespace

std::vector<std::string> capitalized_runs(const std::string& text) {
  std::vector<std::string> out;
  for (auto& r : runs_with_offsets(text)) out.push_back(std::move(r.text));
  return dedupe_entities(out);
}

Vector OfflineBackend::embed_one(const std::string& text) const {
  Vector v(dimension_, 0.0);
  auto tokens = content_tokens(text);
  if (tokens.empty()) {
    v[0] = 1.0;
    return v;
  }
  for (const auto& t : tokens) {
    auto h = fnv1a(t);
    v[h % dimension_] += ((h >> 32) & 1U) ? 1.0 : -1.0;
  }
  if (l2_norm(v) == 0.0) v[fnv1a(tokens.front()) % dimension_] = 1.0;
  return normalized(v);
}

std::vector<Vector> OfflineBackend::embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::string OfflineBackend::chat(const ChatRequest& request) {
  const std::string& text = request.subject;
  switch (request.kind) {
    case PromptKind::ReflexUtility:
    case PromptKind::UtilityTagging:
      return scores_json(text).dump();
    case PromptKind::CortexGating:
      return cortex_json(text);
    case PromptKind::Gating: {
      auto entities = capitalized_runs(text);
      const bool noise = entities.empty() && !has_digit(text);
      return json{{"is_noise", noise},
                  {"priority_score", noise ? 2 : std::min<int>(10, 5 + static_cast<int>(entities.size()))},
                  {"entities", entities},
                  {"reasoning", "offline heuristic"}}
          .dump();
    }
    case PromptKind::RelationExtraction:
      return extraction_json(text);
    case PromptKind::EntityExtraction: {
      auto entities = capitalized_runs(text);
      if (entities.empty()) return "None";
      std::string out;
      for (const auto& e : entities) out += (out.empty() ? "" : ", ") + e;
      return out;
    }
    case PromptKind::Reasoning:
      return "<RESPONSE>" + reasoning_answer(request) + "</RESPONSE>";
  }
  return {};
}

Backends make_offline_backends() {
  auto backend = std::make_shared<OfflineBackend>();
  return Backends{backend, backend};
}

}  // namespace cranimem
