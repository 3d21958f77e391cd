#include "mimic/text_io.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mimic/errors.hpp"

namespace mimic {
namespace {

struct Line {
    std::size_t number = 0;
    std::vector<std::string_view> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    while (!text.empty()) {
        ++number;
        const auto end = text.find('\n');
        std::string_view raw = text.substr(0, end);
        text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        Line line{number, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
            std::size_t j = i;
            while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
            if (j > i) line.tokens.push_back(raw.substr(i, j - i));
            i = j;
        }
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

double to_double(std::string_view token, std::size_t line) {
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ParseError(line, "expected a number, got '" + std::string(token) + "'");
    return value;
}

int to_int(std::string_view token, std::size_t line) {
    int value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ParseError(line, "expected an integer, got '" + std::string(token) + "'");
    return value;
}

/// Parsed document: the kind plus the remaining lines grouped by keyword.
class Document {
public:
    Document(std::string_view text, std::string_view expected_kind) : lines_(tokenize(text)) {
        if (lines_.empty()) throw ParseError(0, "empty document");
        const Line& first = lines_.front();
        if (first.tokens.size() != 2 || first.tokens[0] != "kind")
            throw ParseError(first.number, "expected 'kind <name>'");
        if (first.tokens[1] != expected_kind)
            throw ParseError(first.number, "expected kind '" + std::string(expected_kind) + "', got '" +
                                               std::string(first.tokens[1]) + "'");
        lines_.erase(lines_.begin());
    }

    const std::vector<Line>& lines() const { return lines_; }

    /// The single line starting with `key`, if any.
    const Line* header(std::string_view key) const {
        const Line* found = nullptr;
        for (const Line& line : lines_) {
            if (line.tokens[0] != key) continue;
            if (found) throw ParseError(line.number, "duplicate '" + std::string(key) + "' line");
            found = &line;
        }
        return found;
    }

    const Line& required(std::string_view key) const {
        const Line* line = header(key);
        if (!line) throw ParseError(0, "missing '" + std::string(key) + "' line");
        return *line;
    }

    /// Rejects lines whose keyword is not in `allowed`.
    void only(std::initializer_list<std::string_view> allowed) const {
        for (const Line& line : lines_) {
            bool ok = false;
            for (auto key : allowed) ok = ok || line.tokens[0] == key;
            if (!ok) throw ParseError(line.number, "unexpected keyword '" + std::string(line.tokens[0]) + "'");
        }
    }

private:
    std::vector<Line> lines_;
};

std::vector<std::string> labels_of(const Line& line) {
    if (line.tokens.size() < 2) throw ParseError(line.number, "label list is empty");
    return {line.tokens.begin() + 1, line.tokens.end()};
}

template <class Space>
Space space_of(const Line& line) {
    try {
        return Space(labels_of(line));
    } catch (const std::invalid_argument& e) {
        throw ParseError(line.number, e.what());
    }
}

template <class Space>
std::size_t label_index(const Space& space, std::string_view token, std::size_t line, const char* what) {
    const auto index = space.find(token);
    if (!index) throw ParseError(line, std::string("unknown ") + what + " '" + std::string(token) + "'");
    return *index;
}

int horizon_of(const Document& doc) {
    const Line& line = doc.required("horizon");
    if (line.tokens.size() != 2) throw ParseError(line.number, "expected 'horizon <T>'");
    const int horizon = to_int(line.tokens[1], line.number);
    if (horizon < 0) throw ParseError(line.number, "horizon must be non-negative");
    return horizon;
}

/// Reads numbers tokens[first..] into a vector of the expected length.
Eigen::VectorXd row_of(const Line& line, std::size_t first, std::size_t expected) {
    if (line.tokens.size() != first + expected)
        throw ParseError(line.number, "expected " + std::to_string(expected) + " values, got " +
                                          std::to_string(line.tokens.size() - std::min(first, line.tokens.size())));
    Eigen::VectorXd row(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) row(static_cast<Eigen::Index>(i)) = to_double(line.tokens[first + i], line.number);
    return row;
}

/// Rethrows construction failures as a parse error tied to the document.
template <class F>
auto validated(const char* what, F&& build) {
    try {
        return build();
    } catch (const ParseError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ParseError(0, std::string("invalid ") + what + ": " + e.what());
    } catch (const std::length_error& e) {
        throw ParseError(0, std::string("invalid ") + what + ": " + e.what());
    }
}

PathLaw path_law_from(const Document& doc) {
    const int horizon = horizon_of(doc);
    const StateSpace states = space_of<StateSpace>(doc.required("states"));
    std::optional<ActionSpace> actions;
    if (const Line* line = doc.header("actions")) actions = space_of<ActionSpace>(*line);

    const PathShape shape = validated("path law", [&] {
        return PathShape(states.size(), actions ? actions->size() : 0, horizon);
    });
    std::vector<double> prob(shape.size(), 0.0);
    std::vector<bool> seen(shape.size(), false);
    std::vector<std::size_t> coords(shape.num_coords());
    for (const Line& line : doc.lines()) {
        if (line.tokens[0] != "path") continue;
        if (line.tokens.size() != shape.num_coords() + 2)
            throw ParseError(line.number, "expected " + std::to_string(shape.num_coords()) + " labels and a probability");
        for (std::size_t c = 0; c < shape.num_coords(); ++c) {
            const bool is_action = shape.controlled() && c % 2 == 1;
            coords[c] = is_action ? label_index(*actions, line.tokens[c + 1], line.number, "action")
                                  : label_index(states, line.tokens[c + 1], line.number, "state");
        }
        const std::size_t path = shape.encode(coords);
        if (seen[path]) throw ParseError(line.number, "path listed twice");
        seen[path] = true;
        prob[path] = to_double(line.tokens.back(), line.number);
    }
    return validated("path law", [&] { return PathLaw(states, actions, horizon, std::move(prob)); });
}

void write_path_law_body(std::ostream& out, const PathLaw& law) {
    out << "horizon " << law.horizon() << '\n';
    out << "states";
    for (const auto& s : law.states().labels()) out << ' ' << s;
    out << '\n';
    if (law.actions()) {
        out << "actions";
        for (const auto& a : law.actions()->labels()) out << ' ' << a;
        out << '\n';
    }
    const PathShape& shape = law.shape();
    for (std::size_t path = 0; path < law.size(); ++path) {
        if (law[path] == 0.0) continue;
        out << "path";
        for (std::size_t c = 0; c < shape.num_coords(); ++c) {
            const std::size_t v = shape.coordinate(path, c);
            out << ' ' << (shape.controlled() && c % 2 == 1 ? (*law.actions())[v] : law.states()[v]);
        }
        out << ' ' << format_double(law[path]) << '\n';
    }
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    for (Eigen::Index i = 0; i < row.size(); ++i) out << ' ' << format_double(row(i));
    out << '\n';
}

void write_labels(std::ostream& out, const char* key, const std::vector<std::string>& labels) {
    out << key;
    for (const auto& l : labels) out << ' ' << l;
    out << '\n';
}

/// Fills `matrix` row by row; every row must be given exactly once.
class RowCollector {
public:
    RowCollector(Eigen::Index rows, Eigen::Index cols) : matrix_(Eigen::MatrixXd::Zero(rows, cols)), seen_(static_cast<std::size_t>(rows), false) {}

    void set(std::size_t row, const Eigen::VectorXd& values, std::size_t line) {
        if (seen_[row]) throw ParseError(line, "row given twice");
        seen_[row] = true;
        matrix_.row(static_cast<Eigen::Index>(row)) = values.transpose();
    }
    Eigen::MatrixXd finish(const std::string& what) const {
        for (std::size_t r = 0; r < seen_.size(); ++r)
            if (!seen_[r]) throw ParseError(0, what + ": missing row " + std::to_string(r));
        return matrix_;
    }

private:
    Eigen::MatrixXd matrix_;
    std::vector<bool> seen_;
};

}  // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buffer, ptr);
}

std::string document_kind(std::string_view text) {
    const auto lines = tokenize(text);
    if (lines.empty()) throw ParseError(0, "empty document");
    const Line& first = lines.front();
    if (first.tokens.size() != 2 || first.tokens[0] != "kind") throw ParseError(first.number, "expected 'kind <name>'");
    return std::string(first.tokens[1]);
}

void write_path_law(std::ostream& out, const PathLaw& law) {
    out << "kind pathlaw\n";
    write_path_law_body(out, law);
}

PathLaw read_path_law(std::string_view text) {
    const Document doc(text, "pathlaw");
    doc.only({"horizon", "states", "actions", "path"});
    return path_law_from(doc);
}

void write_markov_chain(std::ostream& out, const MarkovChainModel& chain) {
    out << "kind markov-chain\n";
    out << "horizon " << chain.num_steps() << '\n';
    write_labels(out, "states", chain.states().labels());
    if (chain.actions()) write_labels(out, "actions", chain.actions()->labels());
    out << "initial";
    write_row(out, chain.initial().transpose());
    for (int t = 0; t < chain.num_steps(); ++t)
        for (Eigen::Index x = 0; x < chain.initial().size(); ++x) {
            out << "kernel " << t << ' ' << chain.states()[static_cast<std::size_t>(x)];
            write_row(out, chain.kernels()[static_cast<std::size_t>(t)].row(x));
        }
    for (std::size_t t = 0; t < chain.policy().size(); ++t)
        for (Eigen::Index x = 0; x < chain.initial().size(); ++x) {
            out << "policy " << t << ' ' << chain.states()[static_cast<std::size_t>(x)];
            write_row(out, chain.policy()[t].row(x));
        }
}

MarkovChainModel read_markov_chain(std::string_view text) {
    const Document doc(text, "markov-chain");
    doc.only({"horizon", "states", "actions", "initial", "kernel", "policy"});
    const int horizon = horizon_of(doc);
    const StateSpace states = space_of<StateSpace>(doc.required("states"));
    std::optional<ActionSpace> actions;
    if (const Line* line = doc.header("actions")) actions = space_of<ActionSpace>(*line);
    const auto m = states.size();
    const Eigen::VectorXd initial = row_of(doc.required("initial"), 1, m);

    const auto mi = static_cast<Eigen::Index>(m);
    std::vector<RowCollector> kernels(static_cast<std::size_t>(horizon), RowCollector(mi, mi));
    std::vector<RowCollector> policy;
    if (actions)
        policy.assign(static_cast<std::size_t>(horizon), RowCollector(mi, static_cast<Eigen::Index>(actions->size())));
    for (const Line& line : doc.lines()) {
        const bool is_kernel = line.tokens[0] == "kernel";
        if (!is_kernel && line.tokens[0] != "policy") continue;
        if (!is_kernel && !actions) throw ParseError(line.number, "policy rows need an 'actions' line");
        if (line.tokens.size() < 3) throw ParseError(line.number, "expected '<step> <state> <row>'");
        const int t = to_int(line.tokens[1], line.number);
        if (t < 0 || t >= horizon) throw ParseError(line.number, "step out of range");
        const std::size_t x = label_index(states, line.tokens[2], line.number, "state");
        const std::size_t width = is_kernel ? m : actions->size();
        (is_kernel ? kernels : policy)[static_cast<std::size_t>(t)].set(x, row_of(line, 3, width), line.number);
    }
    std::vector<Eigen::MatrixXd> kernel_mats, policy_mats;
    for (int t = 0; t < horizon; ++t) {
        kernel_mats.push_back(kernels[static_cast<std::size_t>(t)].finish("kernel " + std::to_string(t)));
        if (actions) policy_mats.push_back(policy[static_cast<std::size_t>(t)].finish("policy " + std::to_string(t)));
    }
    return validated("markov chain", [&] {
        return actions ? MarkovChainModel(states, *actions, initial, kernel_mats, policy_mats)
                       : MarkovChainModel(states, initial, kernel_mats);
    });
}

void write_constraint_set(std::ostream& out, const MarginalConstraintSet& set) {
    out << "kind constraint-set\n";
    write_path_law_body(out, set.reference());
    for (const auto& c : set.constraints()) {
        out << "constraint " << c.time;
        write_row(out, c.target.transpose());
    }
}

MarginalConstraintSet read_constraint_set(std::string_view text) {
    const Document doc(text, "constraint-set");
    doc.only({"horizon", "states", "actions", "path", "constraint"});
    PathLaw reference = path_law_from(doc);
    std::vector<MarginalConstraint> constraints;
    for (const Line& line : doc.lines()) {
        if (line.tokens[0] != "constraint") continue;
        if (line.tokens.size() < 2) throw ParseError(line.number, "expected 'constraint <time> <row>'");
        const int t = to_int(line.tokens[1], line.number);
        constraints.push_back({t, row_of(line, 2, reference.states().size())});
    }
    return validated("constraint set", [&] { return MarginalConstraintSet(std::move(reference), std::move(constraints)); });
}

void write_controlled_chain(std::ostream& out, const ControlledChain& chain, const std::optional<Eigen::MatrixXd>& cost) {
    if (!chain.stationary()) throw std::invalid_argument("history-dependent controls cannot be written as text");
    out << "kind controlled-chain\n";
    write_labels(out, "states", chain.states().labels());
    write_labels(out, "actions", chain.actions().labels());
    out << "initial";
    write_row(out, chain.initial().transpose());
    for (std::size_t u = 0; u < chain.actions().size(); ++u)
        for (std::size_t x = 0; x < chain.states().size(); ++x) {
            out << "dynamics " << chain.actions()[u] << ' ' << chain.states()[x];
            write_row(out, chain.dynamics()[u].row(static_cast<Eigen::Index>(x)));
        }
    for (std::size_t x = 0; x < chain.states().size(); ++x) {
        out << "policy " << chain.states()[x];
        write_row(out, chain.policy().row(static_cast<Eigen::Index>(x)));
    }
    if (cost)
        for (std::size_t x = 0; x < chain.states().size(); ++x) {
            out << "cost " << chain.states()[x];
            write_row(out, cost->row(static_cast<Eigen::Index>(x)));
        }
}

ControlledChainInput read_controlled_chain(std::string_view text) {
    const Document doc(text, "controlled-chain");
    doc.only({"states", "actions", "initial", "dynamics", "policy", "cost"});
    const StateSpace states = space_of<StateSpace>(doc.required("states"));
    const ActionSpace actions = space_of<ActionSpace>(doc.required("actions"));
    const auto m = static_cast<Eigen::Index>(states.size());
    const auto a = static_cast<Eigen::Index>(actions.size());
    const Eigen::VectorXd initial = row_of(doc.required("initial"), 1, states.size());

    std::vector<RowCollector> dynamics(actions.size(), RowCollector(m, m));
    RowCollector policy(m, a), cost(m, a);
    bool has_cost = false;
    for (const Line& line : doc.lines()) {
        const auto key = line.tokens[0];
        if (key == "dynamics") {
            if (line.tokens.size() < 3) throw ParseError(line.number, "expected 'dynamics <action> <state> <row>'");
            const std::size_t u = label_index(actions, line.tokens[1], line.number, "action");
            const std::size_t x = label_index(states, line.tokens[2], line.number, "state");
            dynamics[u].set(x, row_of(line, 3, states.size()), line.number);
        } else if (key == "policy" || key == "cost") {
            if (line.tokens.size() < 2) throw ParseError(line.number, "expected '<state> <row>'");
            const std::size_t x = label_index(states, line.tokens[1], line.number, "state");
            if (key == "cost") has_cost = true;
            (key == "policy" ? policy : cost).set(x, row_of(line, 2, actions.size()), line.number);
        }
    }
    std::vector<Eigen::MatrixXd> dyn;
    for (std::size_t u = 0; u < actions.size(); ++u) dyn.push_back(dynamics[u].finish("dynamics " + actions[u]));
    const Eigen::MatrixXd pol = policy.finish("policy");
    std::optional<Eigen::MatrixXd> cost_table;
    if (has_cost) cost_table = cost.finish("cost");
    return validated("controlled chain", [&] {
        return ControlledChainInput{ControlledChain(states, actions, initial, dyn, pol), cost_table};
    });
}

}  // namespace mimic
