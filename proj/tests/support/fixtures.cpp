#include "fixtures.hpp"

#include <algorithm>

#include <json.hpp>

#include "cranimem/text.hpp"

namespace cranimem::testing {

using nlohmann::json;

Vector unit(std::size_t dim, std::size_t axis) {
  Vector v(dim, 0.0);
  v.at(axis) = 1.0;
  return v;
}

std::string utility_json(double importance, double surprise, double emotion,
                         const std::vector<std::string>& entities) {
  return json{{"importance", importance}, {"surprise", surprise}, {"emotion", emotion}, {"entities", entities}}
      .dump();
}

std::string cortex_json(const std::string& category, double importance, double surprise, double emotion,
                        const std::vector<std::string>& entities) {
  return json{{"is_noise", category == "noise"},
              {"category", category},
              {"importance", importance},
              {"surprise", surprise},
              {"emotion", emotion},
              {"entities", entities},
              {"reason", "scripted"}}
      .dump();
}

std::string extraction_json(const std::vector<std::pair<std::string, std::string>>& typed_entities,
                            const std::vector<GraphRelation>& relations) {
  json ents = json::array();
  for (const auto& [type, name] : typed_entities) ents.push_back({{"type", type}, {"name", name}});
  json rels = json::array();
  for (const auto& r : relations) rels.push_back({{"source", r.source}, {"relation", r.relation}, {"target", r.target}});
  return json{{"entities", ents}, {"relations", rels}}.dump();
}

std::string response(const std::string& answer) { return "<RESPONSE>" + answer + "</RESPONSE>"; }

namespace {

const std::vector<std::string> kNames = {"Apollo", "apollo", "APOLLO ", "Borealis", "Cyrus Vance", "cyrus  vance",
                                         "Delta Rig", "Ember", "Fjord", "Gloam", "Helix", "Ivory Gate",
                                         "Juniper", "Kestrel", "Lumen", "Moraine"};
const std::vector<std::string> kRelations = {"uses", "blocked_by", "owns", "Depends On", "depends on",
                                             "has_issue", "located in", "reports_to"};

double unit_real(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::string random_text(Rng& rng, std::size_t words) {
  static const std::vector<std::string> vocab = {"alpha", "ridge", "quartz", "lantern", "signal", "(draft)",
                                                 "über", "line\"quote", "tab\tchar", "brace{x}", "42"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[rng() % vocab.size()];
  }
  return out;
}

}  // namespace

MemoryItem random_item(Rng& rng, const std::string& id, std::int64_t turn) {
  MemoryItem m;
  m.item_id = id;
  m.session_id = "s";
  m.turn_id = turn;
  m.snippet = "snippet " + id + " " + random_text(rng, 1 + rng() % 5);
  m.created_at = 1700000000000 + static_cast<std::int64_t>(rng() % 100000);
  const std::size_t n_entities = rng() % 4;
  for (std::size_t i = 0; i < n_entities; ++i) m.entities.push_back(kNames[rng() % kNames.size()]);
  m.utility = UtilityScores::from(unit_real(rng), unit_real(rng), unit_real(rng));
  m.access_count = static_cast<std::int64_t>(rng() % 6);
  m.last_accessed_turn = m.access_count ? turn + static_cast<std::int64_t>(rng() % 5) : 0;
  m.gate_route = rng() % 2 ? GateRoute::Reflex : GateRoute::Cortex;
  m.gate_similarity = unit_real(rng);
  return m;
}

std::vector<MemoryItem> random_items(Rng& rng, std::size_t n) {
  std::vector<MemoryItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(random_item(rng, "m" + std::to_string(i), static_cast<std::int64_t>(i + 1)));
  return items;
}

Extraction random_extraction(Rng& rng, std::size_t name_pool, std::size_t relation_pool) {
  static const EntityType types[] = {EntityType::Project, EntityType::Person, EntityType::Tool, EntityType::Other};
  name_pool = std::min(name_pool, kNames.size());
  relation_pool = std::min(relation_pool, kRelations.size());
  Extraction x;
  const std::size_t n = 1 + rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    // Type is a pure function of the normalized name so relation endpoints
    // resolve the same way the graph resolves them.
    const auto& name = kNames[rng() % name_pool];
    const auto type = types[std::hash<std::string>{}(normalize_name(name)) % 4];
    x.entities.push_back({name, type});
  }
  const std::size_t r = rng() % 4;
  for (std::size_t i = 0; i < r; ++i) {
    const auto& a = x.entities[rng() % x.entities.size()];
    const auto& b = x.entities[rng() % x.entities.size()];
    x.relations.push_back({a.name, kRelations[rng() % relation_pool], b.name});
  }
  return x;
}

KnowledgeGraph random_graph(Rng& rng, std::size_t upserts) {
  KnowledgeGraph g;
  for (std::size_t i = 0; i < upserts; ++i) {
    g.upsert(random_extraction(rng), "item" + std::to_string(i), static_cast<std::int64_t>(i + 1));
  }
  return g;
}

EngineConfig random_config(Rng& rng) {
  EngineConfig c;
  c.tau_noise = 0.1 + 0.4 * unit_real(rng);
  c.tau_reflex = c.tau_noise + (1.0 - c.tau_noise) * unit_real(rng);
  c.buffer_capacity = 1 + static_cast<std::int64_t>(rng() % 40);
  c.consolidation_period = 1 + static_cast<std::int64_t>(rng() % 20);
  c.tau_consolidation = unit_real(rng);
  if (rng() % 2) c.prune_floor = c.tau_consolidation * unit_real(rng);
  c.alpha = 2.0 * unit_real(rng);
  c.freq_bonus_cap = 5.0 * unit_real(rng);
  c.gate_enabled = rng() % 4 != 0;
  c.gate_profile = rng() % 3 == 0 ? GateProfile::Priority : GateProfile::SimilarityRouted;
  return c;
}

SessionState random_session(Rng& rng, std::size_t index) {
  auto config = random_config(rng);
  auto s = SessionState::fresh("sess-" + std::to_string(index), "goal " + random_text(rng, 3), config);
  if (rng() % 2) {
    Vector v(8);
    for (auto& x : v) x = unit_real(rng) - 0.5;
    v[0] += 1.0;
    s.goal.goal_embedding = normalized(v);
  }
  s.goal.updated_at_turn = static_cast<std::int64_t>(rng() % 10);

  const std::size_t n_items = rng() % (config.buffer_capacity + 1);
  std::vector<MemoryItem> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    items.push_back(random_item(rng, s.session_id + "#" + std::to_string(i + 1), static_cast<std::int64_t>(i + 1)));
  }
  s.buffer = EpisodicBuffer::restore(config.buffer_capacity, std::move(items), static_cast<std::int64_t>(rng() % 7));
  s.graph = random_graph(rng, rng() % 30);

  const std::size_t n_trash = rng() % 6;
  for (std::size_t i = 0; i < n_trash; ++i) {
    TrashEntry t{random_item(rng, "t" + std::to_string(i), static_cast<std::int64_t>(i)),
                 rng() % 2 ? TrashReason::Capacity : TrashReason::Pruned, static_cast<std::int64_t>(i + 3),
                 std::nullopt};
    if (t.reason == TrashReason::Pruned) t.score = unit_real(rng);
    s.trash.append(std::move(t));
  }
  const std::size_t n_runs = rng() % 4;
  for (std::size_t i = 0; i < n_runs; ++i) {
    ConsolidationOutcome o;
    o.triggered_at_turn = static_cast<std::int64_t>(10 * (i + 1));
    o.scored = {{"a", unit_real(rng)}, {"b", unit_real(rng) * 3.0}};
    o.promoted = {"a"};
    o.retained = {"b"};
    if (rng() % 2) o.errors.push_back({"b", "extraction failed: \"bad\" json"});
    o.duration_ms = unit_real(rng);
    s.consolidation_log.push_back(std::move(o));
  }
  s.turn = 40 + static_cast<std::int64_t>(rng() % 100);
  s.last_consolidation_turn = s.turn - static_cast<std::int64_t>(rng() % 10);
  return s;
}

// --- e2e fixture ---------------------------------------------------------

namespace {

struct Persona {
  const char* subject;
  const char* attribute;
  const char* answer;
};

const Persona kPersonas[20] = {
    {"Marta Quill", "home port", "Valparaiso"},   {"Tobias Renn", "favorite tool", "theodolite"},
    {"Ines Calder", "research vessel", "Petrel"}, {"Omar Lisk", "chess opening", "Catalan"},
    {"Yara Voss", "hometown", "Tromso"},          {"Pavel Dunmore", "pet tortoise", "Brisket"},
    {"Hana Okafor", "violin maker", "Guarneri"},  {"Leo Brandt", "mountain club", "Alpenrose"},
    {"Sofia Marr", "thesis topic", "permafrost"}, {"Ravi Tallis", "rowing club", "Leander"},
    {"Greta Hollis", "first car", "Trabant"},     {"Ché Almeida", "tea blend", "Lapsang"},
    {"Nils Ferrow", "observatory", "Paranal"},    {"Aiko Strand", "bakery", "Kornblume"},
    {"Dmitri Vale", "dog", "Kasha"},              {"Lucia Penn", "sailing dinghy", "Mirror"},
    {"Kofi Ansel", "radio callsign", "Zulu Nine"},{"Elin March", "glacier", "Jostedal"},
    {"Bruno Sachs", "printing press", "Heidelberg"}, {"Mira Talbot", "lighthouse", "Fastnet"},
};

const char* const kFiller[3] = {
    "%s reviewed the quarterly notes on Tuesday.",
    "%s took the early train to the workshop.",
    "%s said the meeting ran long again.",
};

constexpr std::size_t kDim = 64;

std::string format1(const char* fmt, const std::string& arg) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, arg.c_str());
  return buf;
}

}  // namespace

EngineConfig e2e_config(bool gated) {
  EngineConfig c;
  c.buffer_capacity = 4;
  c.consolidation_period = 10;
  c.gate_enabled = gated;
  return c;
}

NoiseConfig e2e_noise(std::uint64_t seed) {
  NoiseConfig n;
  n.distractors_per_event = 3;
  n.every_k = 2;
  n.policy = PoolPolicy::CrossRecord;
  n.seed = seed;
  return n;
}

E2EFixture make_e2e_fixture() {
  E2EFixture fx;
  fx.mock = std::make_shared<MockBackend>();
  auto& mock = *fx.mock;
  std::map<std::string, std::string> gold_by_question;

  for (std::size_t i = 0; i < 20; ++i) {
    const auto& p = kPersonas[i];
    const std::string subject = p.subject;
    EvalRecord r;
    r.record_id = "e2e-" + std::to_string(i);
    r.question = "What is " + subject + "'s " + p.attribute + "?";
    r.gold_answer = p.answer;
    r.source = "synthetic";

    const std::string gold = subject + "'s " + p.attribute + " is " + p.answer + ".";
    std::vector<std::string> filler;
    for (const char* f : kFiller) filler.push_back(format1(f, subject));
    const std::size_t gold_pos = i % 2;
    for (std::size_t k = 0, f = 0; k < 4; ++k) r.context_snippets.push_back(k == gold_pos ? gold : filler[f++]);

    const Vector axis = unit(kDim, i);
    Vector side(kDim, 0.0);
    side[i] = 0.6;
    side[20 + i] = 0.8;
    mock.embedding(r.question, axis).embedding(gold, axis);
    for (const auto& s : filler) mock.embedding(s, side);

    // Reflex tagging is what the ungated engine sees for every write.
    mock.script(PromptKind::ReflexUtility, gold, utility_json(0.9, 0.8, 0.7, {subject}));
    for (const auto& s : filler) {
      mock.script(PromptKind::ReflexUtility, s, utility_json(0.3, 0.2, 0.1, {subject}));
      mock.script(PromptKind::CortexGating, s, cortex_json("relevant_context", 0.3, 0.2, 0.1, {subject}));
    }
    mock.script(PromptKind::RelationExtraction, gold,
                extraction_json({{"Person", subject}, {"Other", p.answer}},
                                {{subject, p.attribute, p.answer}}));
    for (const auto& s : filler) {
      mock.script(PromptKind::RelationExtraction, s, extraction_json({{"Person", subject}}, {}));
    }
    mock.script(PromptKind::EntityExtraction, r.question, subject);
    gold_by_question[r.question] = p.answer;
    fx.records.push_back(std::move(r));
  }

  // The reader answers correctly exactly when the gold string made it into
  // the prompt; the question itself never contains it.
  mock.responder(PromptKind::Reasoning, [gold_by_question](const ChatRequest& req) {
    const auto it = gold_by_question.find(req.subject);
    if (it != gold_by_question.end() && req.user.find(it->second) != std::string::npos) {
      return response(it->second);
    }
    return response("unknown");
  });
  return fx;
}

EngineFactory e2e_factory(const E2EFixture& fx, bool gated) {
  auto mock = fx.mock;
  return [mock, gated](const EvalRecord& r, std::size_t) {
    return std::make_unique<Engine>(SessionState::fresh(r.record_id, r.question, e2e_config(gated)),
                                    Backends{mock, mock});
  };
}

// --- chain fixture ---------------------------------------------------------

ChainFixture make_chain_fixture() {
  ChainFixture fx;
  fx.mock = std::make_shared<MockBackend>();
  auto& mock = *fx.mock;
  const std::string a = "Harbor Works acquired Lindqvist Optics in spring.";
  const std::string b = "Lindqvist Optics employs the lens designer Pia Moreau.";
  const std::string c = "Pia Moreau lives near the old canal.";
  fx.snippets = {a, b, c};
  fx.question = "Which lens designer works for the company Harbor Works acquired?";
  fx.question_seeds = {"Harbor Works"};
  fx.bridge_target = "Pia Moreau";

  mock.script(PromptKind::RelationExtraction, a,
              extraction_json({{"Other", "Harbor Works"}, {"Other", "Lindqvist Optics"}},
                              {{"Harbor Works", "acquired", "Lindqvist Optics"}}));
  mock.script(PromptKind::RelationExtraction, b,
              extraction_json({{"Other", "Lindqvist Optics"}, {"Person", "Pia Moreau"}},
                              {{"Lindqvist Optics", "employs", "Pia Moreau"}}));
  mock.script(PromptKind::RelationExtraction, c,
              extraction_json({{"Person", "Pia Moreau"}, {"Location", "old canal"}},
                              {{"Pia Moreau", "lives near", "old canal"}}));
  mock.script(PromptKind::EntityExtraction, fx.question, "Harbor Works");
  for (const auto& s : fx.snippets) {
    mock.embedding(s, unit(8, 0));
    mock.script(PromptKind::ReflexUtility, s, utility_json(0.9, 0.9, 0.6));
  }
  mock.embedding(fx.question, unit(8, 0));
  mock.responder(PromptKind::Reasoning, [target = fx.bridge_target](const ChatRequest& req) {
    return response(req.user.find(target) != std::string::npos ? target : "unknown");
  });
  return fx;
}

}  // namespace cranimem::testing
