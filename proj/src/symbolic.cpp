#include "tsm/symbolic.hpp"

#include <sstream>

namespace tsm {

std::string delay_var(NodeId from, NodeId to) {
    return "d_" + node_name(from) + "_" + node_name(to);
}

std::string exp_var(NodeId node) {
    return "Exp_" + node_name(node);
}

std::string link_var(const std::string& id) {
    return "L_" + id;
}

std::optional<std::pair<NodeId, NodeId>> parse_delay_var(const std::string& name) {
    if (name.rfind("d_", 0) != 0) return std::nullopt;
    auto sep = name.find('_', 2);
    if (sep == std::string::npos) return std::nullopt;
    auto from = parse_node(name.substr(2, sep - 2));
    auto to = parse_node(name.substr(sep + 1));
    if (!from || !to) return std::nullopt;
    return std::make_pair(*from, *to);
}

SymbolicTime SymbolicTime::var(const std::string& name, Rat coeff) {
    SymbolicTime t;
    t.add_term(name, coeff);
    return t;
}

SymbolicTime& SymbolicTime::add_term(const std::string& name, const Rat& coeff) {
    if (coeff == 0) return *this;
    auto [it, inserted] = terms.emplace(name, coeff);
    if (!inserted) {
        it->second += coeff;
        if (it->second == 0) terms.erase(it);
    }
    return *this;
}

SymbolicTime& SymbolicTime::operator+=(const SymbolicTime& o) {
    constant += o.constant;
    for (const auto& [name, c] : o.terms) add_term(name, c);
    return *this;
}

SymbolicTime& SymbolicTime::operator-=(const SymbolicTime& o) {
    constant -= o.constant;
    for (const auto& [name, c] : o.terms) add_term(name, -c);
    return *this;
}

SymbolicTime SymbolicTime::scaled(const Rat& k) const {
    SymbolicTime t;
    if (k == 0) return t;
    t.constant = constant * k;
    for (const auto& [name, c] : terms) t.terms.emplace(name, c * k);
    return t;
}

std::optional<Rat> SymbolicTime::eval(const Assignment& a) const {
    Rat v = constant;
    for (const auto& [name, c] : terms) {
        auto it = a.find(name);
        if (it == a.end()) return std::nullopt;
        v += c * it->second;
    }
    return v;
}

std::string SymbolicTime::str() const {
    if (terms.empty()) return rat_str(constant);
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, c] : terms) {
        if (!first) os << " + ";
        os << rat_str(c) << '*' << name;
        first = false;
    }
    if (constant != 0) os << " + " << rat_str(constant);
    return os.str();
}

std::string SymbolicTime::display_str() const {
    if (terms.empty()) return rat_str(constant);
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, c] : terms) {
        Rat mag = c < 0 ? Rat(-c) : c;
        if (first) {
            if (c < 0) os << '-';
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        if (mag != 1) os << rat_str(mag) << '*';
        os << name;
        first = false;
    }
    if (constant != 0) {
        Rat mag = constant < 0 ? Rat(-constant) : constant;
        os << (constant < 0 ? " - " : " + ") << rat_str(mag);
    }
    return os.str();
}

namespace {

void trim(std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
}

bool valid_var_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

} // namespace

std::optional<SymbolicTime> SymbolicTime::parse(const std::string& text) {
    SymbolicTime out;
    std::string body = text;
    trim(body);
    if (body.empty()) return std::nullopt;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto next = body.find(" + ", pos);
        std::string tok = body.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        trim(tok);
        if (tok.empty()) return std::nullopt;
        auto star = tok.find('*');
        if (star == std::string::npos) {
            auto r = parse_rat(tok);
            if (!r) {
                // bare variable, unit coefficient
                if (!valid_var_name(tok)) return std::nullopt;
                out.add_term(tok, Rat(1));
            } else {
                out.constant += *r;
            }
        } else {
            auto coeff = parse_rat(tok.substr(0, star));
            std::string name = tok.substr(star + 1);
            if (!coeff || !valid_var_name(name)) return std::nullopt;
            out.add_term(name, *coeff);
        }
        if (next == std::string::npos) break;
        pos = next + 3;
    }
    return out;
}

std::optional<bool> LinearConstraint::satisfied(const Assignment& a) const {
    auto l = lhs.eval(a);
    auto r = rhs.eval(a);
    if (!l || !r) return std::nullopt;
    return strict ? (*l < *r) : (*l <= *r);
}

std::string LinearConstraint::str() const {
    return lhs.str() + (strict ? " < " : " <= ") + rhs.str();
}

std::string LinearConstraint::display_str() const {
    return lhs.display_str() + (strict ? " < " : " <= ") + rhs.display_str();
}

std::optional<LinearConstraint> LinearConstraint::parse(const std::string& line) {
    bool strict = false;
    auto sep = line.find(" <= ");
    std::size_t width = 4;
    if (sep == std::string::npos) {
        sep = line.find(" < ");
        width = 3;
        strict = true;
        if (sep == std::string::npos) return std::nullopt;
    }
    auto lhs = SymbolicTime::parse(line.substr(0, sep));
    auto rhs = SymbolicTime::parse(line.substr(sep + width));
    if (!lhs || !rhs) return std::nullopt;
    return LinearConstraint{*lhs, *rhs, strict};
}

} // namespace tsm
