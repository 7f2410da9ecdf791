#include "cranimem/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <spdlog/spdlog.h>

#include "cranimem/errors.hpp"
#include "cranimem/offline_backend.hpp"
#include "cranimem/text.hpp"

namespace cranimem {

namespace {

std::string one_line(const std::string& s) {
  std::string out = s;
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

std::string render_parts(const std::vector<EpisodicEntry>& episodic,
                         const std::vector<GraphFact>& facts) {
  std::string out;
  if (!episodic.empty()) {
    out += kEpisodicHeader;
    out += '\n';
    for (const auto& e : episodic) {
      out += "[turn " + std::to_string(e.turn_id) + "] " + one_line(e.snippet) + '\n';
    }
  }
  if (!facts.empty()) {
    out += kSemanticHeader;
    out += '\n';
    for (const auto& f : facts) out += one_line(f.rendered()) + '\n';
  }
  return out;
}

std::int64_t rendered_size(const std::vector<EpisodicEntry>& episodic,
                           const std::vector<GraphFact>& facts) {
  return static_cast<std::int64_t>(render_parts(episodic, facts).size());
}

}  // namespace

std::string ContextBlock::render() const { return render_parts(episodic_section, semantic_section); }

ContextBlock assemble_block(std::vector<EpisodicEntry> episodic, std::vector<GraphFact> facts,
                            std::int64_t budget) {
  ContextBlock block;
  if (rendered_size(episodic, facts) <= budget) {
    block.episodic_section = std::move(episodic);
    block.semantic_section = std::move(facts);
    block.total_chars = rendered_size(block.episodic_section, block.semantic_section);
    return block;
  }
  block.truncated = true;

  std::vector<bool> keep_episodic(episodic.size(), false);
  std::vector<EpisodicEntry> chosen_episodic;
  std::vector<GraphFact> chosen_facts;

  auto selected_episodic = [&] {
    std::vector<EpisodicEntry> out;
    for (std::size_t i = 0; i < episodic.size(); ++i) {
      if (keep_episodic[i]) out.push_back(episodic[i]);
    }
    return out;
  };

  if (!episodic.empty() && rendered_size({episodic.front()}, {}) <= budget) keep_episodic[0] = true;
  for (const auto& f : facts) {
    auto trial = chosen_facts;
    trial.push_back(f);
    if (rendered_size(selected_episodic(), trial) <= budget) chosen_facts = std::move(trial);
  }
  for (std::size_t i = 1; i < episodic.size(); ++i) {
    keep_episodic[i] = true;
    if (rendered_size(selected_episodic(), chosen_facts) > budget) keep_episodic[i] = false;
  }

  block.episodic_section = selected_episodic();
  block.semantic_section = std::move(chosen_facts);
  block.total_chars = rendered_size(block.episodic_section, block.semantic_section);
  return block;
}

std::vector<std::string> parse_entity_list(const std::string& raw) {
  std::string text = trim(raw);
  if (auto pos = text.find("ENTITIES:"); pos != std::string::npos) text = text.substr(pos + 9);
  std::vector<std::string> out;
  for (char& c : text) {
    if (c == '\n') c = ',';
  }
  for (auto& part : split(text, ',')) {
    auto t = trim(part);
    while (!t.empty() && (t.front() == '"' || t.front() == '\'' || t.front() == '-' || t.front() == '*'))
      t = trim(t.substr(1));
    while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == '.')) t.pop_back();
    if (t.empty() || normalize_name(t) == "none") continue;
    out.push_back(t);
  }
  return dedupe_entities(out);
}

std::vector<std::string> query_entities(const std::string& query, ChatBackend& chat,
                                        bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  ChatRequest req{PromptKind::EntityExtraction, "",
                  fill_template(prompt_template(PromptKind::EntityExtraction), {{"input", query}}),
                  query};
  try {
    return parse_entity_list(chat.chat(req));
  } catch (const BackendUnavailable& e) {
    spdlog::warn("entity extraction unavailable, using capitalized tokens: {}", e.what());
    if (used_fallback) *used_fallback = true;
    return capitalized_runs(query);
  }
}

ContextBlock retrieve(const TurnInput& query, const GoalState& /*goal*/, const EpisodicBuffer& buffer,
                      const KnowledgeGraph& graph, const EngineConfig& config,
                      EmbeddingBackend& embed, ChatBackend& chat) {
  const auto& items = buffer.items();
  const auto k = static_cast<std::size_t>(config.retrieval_top_k_buffer);
  std::vector<std::string> warnings;
  bool degraded = false;

  // Indices into the buffer (oldest first) with their similarity.
  std::vector<std::pair<std::size_t, double>> ranked;
  ranked.reserve(items.size());
  if (!items.empty()) {
    try {
      std::vector<std::string> texts;
      texts.reserve(items.size() + 1);
      texts.push_back(query.text);
      for (const auto& m : items) texts.push_back(m.snippet);
      auto vectors = embed.embed(texts);
      for (std::size_t i = 0; i < items.size(); ++i) {
        ranked.emplace_back(i, cosine_similarity(vectors.at(i + 1), vectors.at(0)));
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first > b.first;
      });
    } catch (const BackendUnavailable& e) {
      degraded = true;
      warnings.push_back(std::string("embedding unavailable, recency-only ranking: ") + e.what());
      spdlog::warn("{}", warnings.back());
      ranked.clear();
      for (std::size_t i = items.size(); i-- > 0;) ranked.emplace_back(i, 0.0);
    }
  }
  if (ranked.size() > k) ranked.resize(k);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<EpisodicEntry> episodic;
  for (const auto& [i, sim] : ranked) {
    episodic.push_back({items[i].item_id, items[i].turn_id, items[i].snippet, sim});
  }

  std::vector<GraphFact> facts;
  if (graph.edge_count() > 0) {
    bool fallback = false;
    auto seeds = query_entities(query.text, chat, &fallback);
    if (fallback) warnings.push_back("query entity extraction fell back to heuristics");
    facts = graph.traverse(seeds, config.max_hops, static_cast<std::size_t>(config.retrieval_top_k_graph));
  }

  auto block = assemble_block(std::move(episodic), std::move(facts), config.context_char_budget);
  block.degraded = degraded;
  block.warnings = std::move(warnings);
  return block;
}

std::string extract_response(const std::string& raw) {
  static const std::string open = "<RESPONSE>";
  static const std::string close = "</RESPONSE>";
  auto b = raw.find(open);
  if (b == std::string::npos) throw AnswerParseError("model output has no <RESPONSE> tag", raw);
  auto e = raw.find(close, b + open.size());
  if (e == std::string::npos) throw AnswerParseError("model output has an unclosed <RESPONSE> tag", raw);
  return trim(std::string_view(raw).substr(b + open.size(), e - b - open.size()));
}

AnswerResult answer(const TurnInput& query, const ContextBlock& block, const GoalState& goal,
                    ChatBackend& chat) {
  const auto prompt = fill_template(prompt_template(PromptKind::Reasoning),
                                    {{"current_goal", goal.goal_text},
                                     {"context", block.render()},
                                     {"current_input", query.text}});
  ChatRequest req{PromptKind::Reasoning, "", prompt, query.text};
  const auto start = std::chrono::steady_clock::now();
  AnswerResult result;
  result.raw_output = chat.chat(req);
  result.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  result.answer = extract_response(result.raw_output);
  return result;
}

}  // namespace cranimem
