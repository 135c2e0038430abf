// Command-line entry point: training stages, fine-tuning, batch generation,
// an interactive chat REPL, evaluation, and the throughput/latency
// benchmarks. Exit codes: 0 success, 2 configuration error, 3 data error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dverg/bench.hpp"
#include "dverg/checkpoint.hpp"
#include "dverg/classifier.hpp"
#include "dverg/corpus.hpp"
#include "dverg/embeddings.hpp"
#include "dverg/emotion.hpp"
#include "dverg/generate.hpp"
#include "dverg/metrics.hpp"
#include "dverg/synth.hpp"
#include "dverg/training.hpp"

namespace fs = std::filesystem;
using namespace dverg;

namespace {

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty()) throw std::invalid_argument("config: missing " + what + " path");
    if (!fs::exists(path))
        throw std::invalid_argument("config: " + what + " path does not exist: " + path);
}

// non-blank lines
std::vector<std::string> read_question_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("questions: cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!trim_copy(line).empty()) out.push_back(line);
    if (out.empty()) throw std::runtime_error("questions: no usable lines in " + path);
    return out;
}

// every line, blanks preserved (candidate files align 1:1 with corpus lines)
std::vector<std::string> read_all_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("candidates: cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

// path "-" or empty selects stdout
struct OutStream {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutStream(const std::string& path) {
        if (!path.empty() && path != "-") {
            file.open(path);
            if (!file) throw std::runtime_error("cannot write " + path);
            os = &file;
        }
    }
    std::ostream& get() { return *os; }
};

int stage_rank(const std::string& stage) {
    if (stage == kStageS2s) return 0;
    if (stage == kStageVocab) return 1;
    if (stage == kStageFinetuned) return 2;
    return -1;
}

void require_stage_at_least(const Checkpoint<float>& ckpt, const std::string& need) {
    if (stage_rank(ckpt.stage) < stage_rank(need))
        throw std::runtime_error("checkpoint stage '" + ckpt.stage + "', requires stage '" +
                                 need + "'");
}

Checkpoint<float> load_checkpoint(const std::string& dir) {
    require_exists(dir, "checkpoint");
    return Checkpoint<float>::load(dir);
}

int argmax_index(const std::vector<float>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Training options: each flag remembered so that explicitly set values can
// be overlaid onto a checkpoint's stored configuration.
struct TrainFlags {
    TrainConfig bound;
    std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&, const TrainConfig&)>>>
        setters;

    void reg(CLI::Option* opt, std::function<void(TrainConfig&, const TrainConfig&)> fn) {
        setters.emplace_back(opt, std::move(fn));
    }

    void add_schedule(CLI::App* cmd) {
        reg(cmd->add_option("--lr", bound.learning_rate, "learning rate"),
            [](TrainConfig& d, const TrainConfig& s) { d.learning_rate = s.learning_rate; });
        reg(cmd->add_option("--epochs", bound.epochs, "training epochs"),
            [](TrainConfig& d, const TrainConfig& s) { d.epochs = s.epochs; });
        reg(cmd->add_option("--batch-size", bound.batch_size, "examples per optimizer step"),
            [](TrainConfig& d, const TrainConfig& s) { d.batch_size = s.batch_size; });
        reg(cmd->add_option("--seed", bound.seed, "training RNG seed"),
            [](TrainConfig& d, const TrainConfig& s) { d.seed = s.seed; });
        reg(cmd->add_option("--clip", bound.grad_clip_norm, "global gradient-norm clip"),
            [](TrainConfig& d, const TrainConfig& s) { d.grad_clip_norm = s.grad_clip_norm; });
        reg(cmd->add_option("--joint-weight", bound.joint_loss_weight,
                            "weight of the vocabulary loss in the joint objective"),
            [](TrainConfig& d, const TrainConfig& s) {
                d.joint_loss_weight = s.joint_loss_weight;
            });
        reg(cmd->add_option("--neg-ratio", bound.neg_ratio,
                            "negatives sampled per positive; -1 = auto"),
            [](TrainConfig& d, const TrainConfig& s) { d.neg_ratio = s.neg_ratio; });
        reg(cmd->add_option("--train-tau", bound.tau,
                            "selection threshold for fine-tuning vocabularies"),
            [](TrainConfig& d, const TrainConfig& s) { d.tau = s.tau; });
        reg(cmd->add_option("--train-cap", bound.cap,
                            "content-word cap for fine-tuning vocabularies; 0 = none"),
            [](TrainConfig& d, const TrainConfig& s) { d.cap = s.cap; });
    }

    void add_structure(CLI::App* cmd) {
        reg(cmd->add_option("--hidden", bound.hidden_size, "GRU hidden size"),
            [](TrainConfig& d, const TrainConfig& s) { d.hidden_size = s.hidden_size; });
        reg(cmd->add_option("--embedding-dim", bound.embedding_dim, "word embedding dim"),
            [](TrainConfig& d, const TrainConfig& s) { d.embedding_dim = s.embedding_dim; });
        reg(cmd->add_option("--emotion-dim", bound.emotion_dim, "emotion embedding dim"),
            [](TrainConfig& d, const TrainConfig& s) { d.emotion_dim = s.emotion_dim; });
    }

    TrainConfig overlay(TrainConfig base) const {
        for (const auto& [opt, fn] : setters)
            if (opt->count() > 0) fn(base, bound);
        return base;
    }
};

struct GenFlags {
    std::string mode = "greedy";
    bool use_static = false;
    GenerationConfig bound;

    void add(CLI::App* cmd) {
        cmd->add_option("--mode", mode, "decoding mode")
            ->check(CLI::IsMember({"greedy", "beam"}));
        cmd->add_option("--beam-width", bound.beam_width, "beam width");
        cmd->add_option("--max-length", bound.max_length, "maximum response tokens");
        cmd->add_flag("--static", use_static, "decode over the full static vocabulary");
        cmd->add_option("--tau", bound.tau, "content-word selection threshold");
        cmd->add_option("--cap", bound.cap, "max threshold-selected content words; 0 = none");
    }

    GenerationConfig resolve() const {
        GenerationConfig g = bound;
        g.mode = mode == "beam" ? GenerationConfig::Mode::kBeam : GenerationConfig::Mode::kGreedy;
        g.dynamic_vocab = !use_static;
        g.validate();
        return g;
    }
};

EmotionMap load_mapping(const std::string& path, const EmotionTaxonomy& tax) {
    if (path.empty()) return EmotionMap::defaults(tax);
    require_exists(path, "mapping");
    return EmotionMap::load_file(path, tax);
}

struct GeneratedLine {
    int question_emotion;
    int chosen_emotion;
    GenerationResult result;
};

// classify -> map -> sample (or override) -> generate
GeneratedLine respond(const Checkpoint<float>& ckpt, const EmotionMap& mapping,
                      const std::vector<int>& question_ids, int override_emotion,
                      const GenerationConfig& gen, std::mt19937& rng) {
    auto probs = classify_emotion(question_ids, ckpt.classifier, ckpt.s2s.word_emb);
    GeneratedLine out;
    out.question_emotion = argmax_index(probs.data());
    out.chosen_emotion = override_emotion >= 0
                             ? override_emotion
                             : sample_response_emotion(mapping.candidates(out.question_emotion),
                                                       rng);
    out.result = generate(question_ids, out.chosen_emotion, ckpt.s2s,
                          gen.dynamic_vocab ? &ckpt.vocab_predictor : nullptr, ckpt.vocab, gen);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dverg: emotion-controlled dialog response generation with per-input dynamic "
                 "vocabularies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "dverg 1.0.0");
    app.set_config("--config", "", "key=value config file with [subcommand] sections");
    app.allow_config_extras(false);

    // ---- train-s2s ----
    auto* c_s2s = app.add_subcommand("train-s2s",
                                     "stage 1: train the emotion-conditioned seq2seq generator");
    struct {
        std::string corpus, out, taxonomy, embeddings, function_words;
        int max_vocab = 50000, min_count = 1;
        TrainFlags train;
    } s2s;
    c_s2s->add_option("--corpus", s2s.corpus, "training pairs, JSONL")->required();
    c_s2s->add_option("--out", s2s.out, "checkpoint directory to write")->required();
    c_s2s->add_option("--taxonomy", s2s.taxonomy, "emotion labels, one per line");
    c_s2s->add_option("--embeddings", s2s.embeddings, "pretrained embeddings, word2vec text");
    c_s2s->add_option("--function-words", s2s.function_words, "function-word list, one per line");
    c_s2s->add_option("--max-vocab", s2s.max_vocab, "vocabulary size limit");
    c_s2s->add_option("--min-count", s2s.min_count, "minimum token count");
    s2s.train.add_structure(c_s2s);
    s2s.train.add_schedule(c_s2s);
    c_s2s->callback([&] {
        require_exists(s2s.corpus, "corpus");
        auto tax = s2s.taxonomy.empty() ? EmotionTaxonomy::defaults()
                                        : (require_exists(s2s.taxonomy, "taxonomy"),
                                           EmotionTaxonomy::load_file(s2s.taxonomy));
        auto raw = load_corpus_file(s2s.corpus, tax);
        std::set<std::string> fw;
        if (!s2s.function_words.empty()) {
            require_exists(s2s.function_words, "function words");
            fw = load_function_words_file(s2s.function_words);
        }
        auto vocab = Vocabulary::build(corpus_token_streams(raw), s2s.max_vocab, s2s.min_count,
                                       fw);
        TrainConfig cfg = s2s.train.overlay(TrainConfig{});
        cfg.validate();
        Tensor<float> emb;
        if (s2s.embeddings.empty()) {
            emb = random_embeddings<float>(vocab, cfg.embedding_dim, cfg.seed);
        } else {
            require_exists(s2s.embeddings, "embeddings");
            emb = load_embeddings_file<float>(s2s.embeddings, vocab, cfg.embedding_dim, cfg.seed);
        }
        auto ckpt = train_seq2seq(encode_corpus(raw, vocab), vocab, tax, emb, cfg, &std::cerr);
        ckpt.save(s2s.out);
        std::cerr << "wrote stage '" << ckpt.stage << "' checkpoint: " << s2s.out << "\n";
    });

    // ---- train-classifier ----
    auto* c_cls = app.add_subcommand("train-classifier",
                                     "train the question emotion classifier inside a checkpoint");
    struct {
        std::string checkpoint, corpus, out;
        TrainFlags train;
    } cls;
    c_cls->add_option("--checkpoint", cls.checkpoint, "checkpoint directory")->required();
    c_cls->add_option("--corpus", cls.corpus, "JSONL pairs carrying question_emotion")
        ->required();
    c_cls->add_option("--out", cls.out, "output checkpoint directory (default: in place)");
    cls.train.add_schedule(c_cls);
    c_cls->callback([&] {
        require_exists(cls.corpus, "corpus");
        auto ckpt = load_checkpoint(cls.checkpoint);
        auto raw = load_corpus_file(cls.corpus, ckpt.taxonomy);
        std::vector<LabeledQuestion> data;
        for (const auto& ex : raw)
            if (ex.question_emotion)
                data.push_back({ckpt.vocab.encode(ex.question), *ex.question_emotion});
        if (data.empty())
            throw std::runtime_error("train-classifier: no question_emotion labels in " +
                                     cls.corpus);
        std::vector<bool> seen(ckpt.taxonomy.size(), false);
        for (const auto& ex : data) seen[ex.label] = true;
        for (int l = 0; l < ckpt.taxonomy.size(); ++l)
            if (!seen[l])
                throw std::runtime_error("train-classifier: corpus has no examples for label '" +
                                         ckpt.taxonomy.label(l) + "'");
        TrainConfig cfg = cls.train.overlay(ckpt.config);
        cfg.validate();
        train_classifier(data, ckpt.taxonomy, ckpt.classifier, ckpt.s2s.word_emb, cfg,
                         &std::cerr);
        ckpt.save(cls.out.empty() ? cls.checkpoint : cls.out);
    });

    // ---- train-vocab ----
    auto* c_voc = app.add_subcommand("train-vocab",
                                     "stage 2: train the dynamic-vocabulary predictor");
    struct {
        std::string checkpoint, corpus, out;
        TrainFlags train;
    } voc;
    c_voc->add_option("--checkpoint", voc.checkpoint, "stage 's2s' checkpoint")->required();
    c_voc->add_option("--corpus", voc.corpus, "training pairs, JSONL")->required();
    c_voc->add_option("--out", voc.out, "output checkpoint directory (default: in place)");
    voc.train.add_schedule(c_voc);
    c_voc->callback([&] {
        require_exists(voc.corpus, "corpus");
        auto ckpt = load_checkpoint(voc.checkpoint);
        auto raw = load_corpus_file(voc.corpus, ckpt.taxonomy);
        TrainConfig cfg = voc.train.overlay(ckpt.config);
        cfg.validate();
        auto encoded = encode_corpus(raw, ckpt.vocab);  // before the move below
        auto out = train_vocab_model(encoded, std::move(ckpt), cfg, &std::cerr);
        out.save(voc.out.empty() ? voc.checkpoint : voc.out);
        std::cerr << "wrote stage '" << out.stage << "' checkpoint\n";
    });

    // ---- finetune ----
    auto* c_ft = app.add_subcommand("finetune", "stage 3: joint fine-tuning");
    struct {
        std::string checkpoint, corpus, out, mode;
        TrainFlags train;
    } ft;
    c_ft->add_option("--checkpoint", ft.checkpoint, "stage 'vocab' checkpoint")->required();
    c_ft->add_option("--corpus", ft.corpus, "training pairs, JSONL")->required();
    c_ft->add_option("--out", ft.out, "output checkpoint directory (default: in place)");
    c_ft->add_option("--mode", ft.mode, "no-ft, ft-target, or ft-both")
        ->required()
        ->check(CLI::IsMember({"no-ft", "ft-target", "ft-both"}));
    ft.train.add_schedule(c_ft);
    c_ft->callback([&] {
        require_exists(ft.corpus, "corpus");
        auto ckpt = load_checkpoint(ft.checkpoint);
        auto raw = load_corpus_file(ft.corpus, ckpt.taxonomy);
        TrainConfig cfg = ft.train.overlay(ckpt.config);
        cfg.finetune_mode = parse_finetune_mode(ft.mode);
        cfg.validate();
        auto encoded = encode_corpus(raw, ckpt.vocab);  // before the move below
        auto out = finetune(encoded, std::move(ckpt), cfg, &std::cerr);
        out.save(ft.out.empty() ? ft.checkpoint : ft.out);
        std::cerr << "wrote stage '" << out.stage << "' checkpoint\n";
    });

    // ---- generate ----
    auto* c_gen = app.add_subcommand("generate", "batch-generate responses for a question file");
    struct {
        std::string checkpoint, questions, out, mapping, emotion_override;
        uint64_t seed = 1;
        GenFlags gen;
    } gen;
    c_gen->add_option("--checkpoint", gen.checkpoint, "checkpoint directory")->required();
    c_gen->add_option("--questions", gen.questions, "questions, one per line")->required();
    c_gen->add_option("--out", gen.out, "output JSONL path; - for stdout");
    c_gen->add_option("--mapping", gen.mapping, "emotion mapping file");
    c_gen->add_option("--emotion-override", gen.emotion_override,
                      "force this response emotion for every question");
    c_gen->add_option("--seed", gen.seed, "emotion sampling seed");
    gen.gen.add(c_gen);
    c_gen->callback([&] {
        require_exists(gen.questions, "questions");
        auto ckpt = load_checkpoint(gen.checkpoint);
        GenerationConfig g = gen.gen.resolve();
        if (g.dynamic_vocab) require_stage_at_least(ckpt, kStageVocab);
        auto mapping = load_mapping(gen.mapping, ckpt.taxonomy);
        int override_id =
            gen.emotion_override.empty() ? -1 : ckpt.taxonomy.id_of(gen.emotion_override);
        auto questions = read_question_lines(gen.questions);
        std::mt19937 rng(static_cast<uint32_t>(gen.seed));
        OutStream out(gen.out);
        for (const auto& line : questions) {
            auto ids = ckpt.vocab.encode(tokenize(line));
            auto r = respond(ckpt, mapping, ids, override_id, g, rng);
            nlohmann::json j;
            j["question"] = line;
            j["question_emotion"] = ckpt.taxonomy.label(r.question_emotion);
            j["chosen_emotion"] = ckpt.taxonomy.label(r.chosen_emotion);
            j["response"] = join_tokens(ckpt.vocab.decode(r.result.tokens));
            j["voc_size"] = static_cast<int>(r.result.vocab_used.active.size());
            out.get() << j.dump() << "\n";
        }
    });

    // ---- chat ----
    auto* c_chat = app.add_subcommand("chat", "interactive REPL");
    struct {
        std::string checkpoint, mapping;
        uint64_t seed = 1;
        GenFlags gen;
    } chat;
    c_chat->add_option("--checkpoint", chat.checkpoint, "checkpoint directory")->required();
    c_chat->add_option("--mapping", chat.mapping, "emotion mapping file");
    c_chat->add_option("--seed", chat.seed, "emotion sampling seed");
    chat.gen.add(c_chat);
    c_chat->callback([&] {
        auto ckpt = load_checkpoint(chat.checkpoint);
        GenerationConfig g = chat.gen.resolve();
        if (g.dynamic_vocab) require_stage_at_least(ckpt, kStageVocab);
        auto mapping = load_mapping(chat.mapping, ckpt.taxonomy);
        std::mt19937 rng(static_cast<uint32_t>(chat.seed));
        std::string line;
        while (true) {
            std::cerr << "> " << std::flush;
            if (!std::getline(std::cin, line)) break;  // end of input: exit cleanly
            if (trim_copy(line).empty()) continue;     // re-prompt
            auto ids = ckpt.vocab.encode(tokenize(line));
            auto r = respond(ckpt, mapping, ids, -1, g, rng);
            std::cout << "[" << ckpt.taxonomy.label(r.question_emotion) << " → "
                      << ckpt.taxonomy.label(r.chosen_emotion) << "] "
                      << join_tokens(ckpt.vocab.decode(r.result.tokens)) << "\n";
        }
        std::cerr << "\n";
    });

    // ---- eval ----
    auto* c_eval = app.add_subcommand("eval", "score responses against a reference corpus");
    struct {
        std::string checkpoint, corpus, candidates, out;
        GenFlags gen;
    } ev;
    c_eval->add_option("--checkpoint", ev.checkpoint, "checkpoint directory")->required();
    c_eval->add_option("--corpus", ev.corpus, "reference pairs, JSONL")->required();
    c_eval->add_option("--candidates", ev.candidates,
                       "pre-generated responses, one line per corpus pair (skips generation)");
    c_eval->add_option("--out", ev.out, "metrics JSON path; - for stdout");
    ev.gen.add(c_eval);
    c_eval->callback([&] {
        require_exists(ev.corpus, "corpus");
        auto ckpt = load_checkpoint(ev.checkpoint);
        auto raw = load_corpus_file(ev.corpus, ckpt.taxonomy);
        std::vector<EvalExample> pairs;
        if (!ev.candidates.empty()) {
            require_exists(ev.candidates, "candidates");
            auto lines = read_all_lines(ev.candidates);
            if (lines.size() != raw.size())
                throw std::runtime_error("candidates: " + std::to_string(lines.size()) +
                                         " lines for " + std::to_string(raw.size()) +
                                         " corpus pairs");
            auto full = full_vocab_active(ckpt.vocab);
            for (size_t i = 0; i < raw.size(); ++i)
                pairs.push_back({tokenize(lines[i]), raw[i].response, full.active});
        } else {
            GenerationConfig g = ev.gen.resolve();
            if (g.dynamic_vocab) require_stage_at_least(ckpt, kStageVocab);
            for (const auto& ex : raw) {
                auto ids = ckpt.vocab.encode(ex.question);
                auto r = generate(ids, ex.response_emotion, ckpt.s2s,
                                  g.dynamic_vocab ? &ckpt.vocab_predictor : nullptr, ckpt.vocab,
                                  g);
                pairs.push_back({ckpt.vocab.decode(r.tokens), ex.response,
                                 r.vocab_used.active});
            }
        }
        auto rep = evaluate(pairs, ckpt.vocab, ckpt.s2s.word_emb);
        OutStream out(ev.out);
        nlohmann::json j = rep;
        out.get() << j.dump(2) << "\n";
        std::cerr << format_table(rep);
    });

    // ---- bench ----
    auto* c_bench = app.add_subcommand("bench", "closed-loop si-QPS measurement");
    struct {
        std::string checkpoint, questions, out;
        int concurrency = 1;
        double duration = 5.0;
        uint64_t seed = 1;
        GenFlags gen;
    } bench;
    c_bench->add_option("--checkpoint", bench.checkpoint, "checkpoint directory")->required();
    c_bench->add_option("--questions", bench.questions, "questions, one per line")->required();
    c_bench->add_option("--out", bench.out, "report JSON path; - for stdout");
    c_bench->add_option("--concurrency", bench.concurrency, "closed-loop workers");
    c_bench->add_option("--duration", bench.duration, "seconds, including 10% warmup");
    c_bench->add_option("--seed", bench.seed, "per-worker RNG base seed");
    bench.gen.add(c_bench);
    c_bench->callback([&] {
        require_exists(bench.questions, "questions");
        auto ckpt = load_checkpoint(bench.checkpoint);
        GenerationConfig g = bench.gen.resolve();
        if (g.dynamic_vocab) require_stage_at_least(ckpt, kStageVocab);
        std::vector<std::vector<int>> encoded;
        for (const auto& line : read_question_lines(bench.questions))
            encoded.push_back(ckpt.vocab.encode(tokenize(line)));
        BenchEngine engine = [&](const std::vector<int>& q, std::mt19937& rng) {
            std::uniform_int_distribution<int> pick(0, ckpt.taxonomy.size() - 1);
            auto r = generate(q, pick(rng), ckpt.s2s,
                              g.dynamic_vocab ? &ckpt.vocab_predictor : nullptr, ckpt.vocab, g);
            return r.timings;
        };
        auto rep = run_qps(engine, encoded, bench.concurrency, bench.duration, bench.seed);
        OutStream out(bench.out);
        nlohmann::json j = rep;
        out.get() << j.dump(2) << "\n";
    });

    // ---- sweep ----
    auto* c_sweep = app.add_subcommand(
        "sweep", "vocabulary-size vs decode-latency sweep over tau or cap values");
    struct {
        std::string checkpoint, questions, out;
        std::vector<double> taus;
        std::vector<int> caps;
        GenFlags gen;
    } sweep;
    c_sweep->add_option("--checkpoint", sweep.checkpoint, "checkpoint directory")->required();
    c_sweep->add_option("--questions", sweep.questions, "questions, one per line")->required();
    c_sweep->add_option("--out", sweep.out, "CSV path; - for stdout");
    c_sweep->add_option("--taus", sweep.taus, "comma-separated tau grid")->delimiter(',');
    c_sweep->add_option("--caps", sweep.caps, "comma-separated cap grid")->delimiter(',');
    sweep.gen.add(c_sweep);
    c_sweep->callback([&] {
        require_exists(sweep.questions, "questions");
        if (sweep.taus.empty() == sweep.caps.empty())
            throw std::invalid_argument("sweep: provide exactly one of --taus or --caps");
        auto ckpt = load_checkpoint(sweep.checkpoint);
        require_stage_at_least(ckpt, kStageVocab);
        GenerationConfig g = sweep.gen.resolve();
        std::vector<std::vector<int>> encoded;
        for (const auto& line : read_question_lines(sweep.questions))
            encoded.push_back(ckpt.vocab.encode(tokenize(line)));
        std::vector<SweepSetting> settings;
        for (double t : sweep.taus) settings.push_back({t, g.cap});
        for (int c : sweep.caps) settings.push_back({g.tau, c});
        auto rows = sweep_vocab_latency(ckpt, encoded, settings, g);
        OutStream out(sweep.out);
        write_sweep_csv(out.get(), rows);
    });

    // ---- synth ----
    auto* c_synth = app.add_subcommand("synth", "write the deterministic synthetic toy corpus");
    struct {
        std::string out, taxonomy;
        int templates = 50, emotions = 4;
    } synth;
    c_synth->add_option("--out", synth.out, "JSONL path; - for stdout");
    c_synth->add_option("--taxonomy", synth.taxonomy, "emotion labels, one per line");
    c_synth->add_option("--templates", synth.templates, "question templates");
    c_synth->add_option("--emotions", synth.emotions, "emotions swept per template");
    c_synth->callback([&] {
        auto tax = synth.taxonomy.empty() ? EmotionTaxonomy::defaults()
                                          : (require_exists(synth.taxonomy, "taxonomy"),
                                             EmotionTaxonomy::load_file(synth.taxonomy));
        auto corpus = synth_corpus(tax, SynthConfig{synth.templates, synth.emotions});
        OutStream out(synth.out);
        write_corpus_jsonl(out.get(), corpus, tax);
    });

    // --config (and --version/--help) may appear before or after the subcommand
    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
