#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace swapcert {

/// One symbol in a word of measurement operators: which party acts and which
/// of its dichotomic observables. Letters of distinct parties commute; every
/// letter squares to the identity. Nothing else is assumed.
struct Letter {
    std::int8_t party;
    std::int8_t meas;

    friend bool operator==(const Letter&, const Letter&) = default;
    friend auto operator<=>(const Letter&, const Letter&) = default;
};

/// A word of Letters kept in canonical form: letters grouped by ascending
/// party, order inside one party preserved, and adjacent equal letters
/// cancelled to a fixpoint. The empty word is the identity.
class Monomial {
public:
    Monomial() = default;

    static Monomial identity() { return Monomial(); }

    static Monomial single(int party, int meas) {
        return from_letters({Letter{static_cast<std::int8_t>(party),
                                    static_cast<std::int8_t>(meas)}});
    }

    /// Canonicalizes an arbitrary letter sequence. Cross-party letters are
    /// stably sorted by party; within each party adjacent duplicates cancel
    /// until none remain.
    static Monomial from_letters(std::vector<Letter> letters) {
        std::stable_sort(letters.begin(), letters.end(),
                         [](const Letter& a, const Letter& b) { return a.party < b.party; });
        std::vector<Letter> reduced;
        reduced.reserve(letters.size());
        for (const Letter& l : letters) {
            if (!reduced.empty() && reduced.back() == l)
                reduced.pop_back();
            else
                reduced.push_back(l);
        }
        Monomial m;
        m.letters_ = std::move(reduced);
        return m;
    }

    const std::vector<Letter>& letters() const { return letters_; }
    bool is_identity() const { return letters_.empty(); }
    std::size_t degree() const { return letters_.size(); }

    /// Letters belonging to one party, in order (a contiguous block).
    std::vector<Letter> party_block(int party) const {
        std::vector<Letter> block;
        for (const Letter& l : letters_)
            if (l.party == party) block.push_back(l);
        return block;
    }

    int max_party() const {
        int p = -1;
        for (const Letter& l : letters_) p = std::max(p, static_cast<int>(l.party));
        return p;
    }

    /// Number of parties that contribute at least one letter.
    int body_count() const {
        int count = 0;
        int last = -1;
        for (const Letter& l : letters_) {
            if (l.party != last) ++count;
            last = l.party;
        }
        return count;
    }

    std::size_t max_party_degree() const {
        std::size_t best = 0, run = 0;
        int last = -1;
        for (const Letter& l : letters_) {
            run = (l.party == last) ? run + 1 : 1;
            last = l.party;
            best = std::max(best, run);
        }
        return best;
    }

    friend Monomial multiply(const Monomial& u, const Monomial& v) {
        std::vector<Letter> joined = u.letters_;
        joined.insert(joined.end(), v.letters_.begin(), v.letters_.end());
        return from_letters(std::move(joined));
    }

    /// Reverses the letter order within each party block: the image of the
    /// word under the *-involution, given that every letter is self-adjoint.
    friend Monomial adjoint(const Monomial& u) {
        std::vector<Letter> rev(u.letters_.rbegin(), u.letters_.rend());
        return from_letters(std::move(rev));
    }

    /// Total order: shorter words first, ties broken lexicographically on
    /// (party, meas). Gives deterministic map keys and representative picks.
    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.letters_.size() != b.letters_.size())
            return a.letters_.size() < b.letters_.size();
        return a.letters_ < b.letters_;
    }
    friend bool operator==(const Monomial&, const Monomial&) = default;

    /// Text form: space-separated party letter plus measurement index, e.g.
    /// "A0 A1 B0"; the identity prints as "1".
    std::string to_string() const {
        if (letters_.empty()) return "1";
        std::string s;
        for (const Letter& l : letters_) {
            if (!s.empty()) s += ' ';
            s += static_cast<char>('A' + l.party);
            s += std::to_string(static_cast<int>(l.meas));
        }
        return s;
    }

    static Monomial parse(const std::string& text) {
        if (text == "1") return identity();
        std::vector<Letter> letters;
        std::size_t i = 0;
        while (i < text.size()) {
            if (text[i] == ' ') { ++i; continue; }
            char p = text[i];
            if (p < 'A' || p > 'Z')
                throw std::invalid_argument("Monomial::parse: bad party letter in '" + text + "'");
            ++i;
            std::size_t start = i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            if (start == i)
                throw std::invalid_argument("Monomial::parse: missing measurement index in '" + text + "'");
            int meas = std::stoi(text.substr(start, i - start));
            letters.push_back(Letter{static_cast<std::int8_t>(p - 'A'),
                                     static_cast<std::int8_t>(meas)});
        }
        return from_letters(std::move(letters));
    }

private:
    std::vector<Letter> letters_;
};

/// sigma[q] is the party index that party q's letters move to.
using PartyPermutation = std::vector<int>;

inline PartyPermutation perm_identity(int n) {
    PartyPermutation p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

inline PartyPermutation perm_compose(const PartyPermutation& g, const PartyPermutation& h) {
    PartyPermutation r(h.size());
    for (std::size_t q = 0; q < h.size(); ++q) r[q] = g[h[q]];
    return r;
}

inline PartyPermutation perm_inverse(const PartyPermutation& g) {
    PartyPermutation r(g.size());
    for (std::size_t q = 0; q < g.size(); ++q) r[g[q]] = static_cast<int>(q);
    return r;
}

/// Left action on words: the letter (q, m) becomes (sigma[q], m). Composition
/// satisfies apply(compose(g,h), u) == apply(g, apply(h, u)).
inline Monomial apply_permutation(const PartyPermutation& sigma, const Monomial& u) {
    std::vector<Letter> letters = u.letters();
    for (Letter& l : letters) {
        if (l.party < 0 || static_cast<std::size_t>(l.party) >= sigma.size())
            throw std::invalid_argument("apply_permutation: letter party outside permutation domain");
        l.party = static_cast<std::int8_t>(sigma[l.party]);
    }
    return Monomial::from_letters(std::move(letters));
}

/// A set of party permutations, closed under composition and inverse.
/// Closure is checked at construction.
class PermutationGroup {
public:
    explicit PermutationGroup(std::vector<PartyPermutation> elements)
        : elements_(std::move(elements)) {
        if (elements_.empty())
            throw std::invalid_argument("PermutationGroup: empty element set");
        const std::size_t n = elements_.front().size();
        for (const auto& g : elements_)
            if (g.size() != n)
                throw std::invalid_argument("PermutationGroup: mixed permutation sizes");
        std::sort(elements_.begin(), elements_.end());
        elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
        verify_closure();
    }

    static PermutationGroup trivial(int n) {
        return PermutationGroup({perm_identity(n)});
    }

    /// Full symmetric group on the first k of n parties (the remaining
    /// parties stay fixed); k == n gives S_n.
    static PermutationGroup symmetric(int n, int k = -1) {
        if (k < 0) k = n;
        std::vector<int> moved(k);
        std::iota(moved.begin(), moved.end(), 0);
        std::vector<PartyPermutation> elems;
        std::vector<int> image = moved;
        do {
            PartyPermutation g = perm_identity(n);
            for (int i = 0; i < k; ++i) g[moved[i]] = image[i];
            elems.push_back(g);
        } while (std::next_permutation(image.begin(), image.end()));
        return PermutationGroup(std::move(elems));
    }

    /// Cyclic group generated by the relabeling that matches the paper-style
    /// cycle on three parties: letters of party B move to A, C to B, A to C
    /// (so a word f(Z_A, X_B, D_C) becomes f(X_A, D_B, Z_C)). Generalizes to
    /// n parties as party q's letters moving to party q-1 (mod n).
    static PermutationGroup cyclic(int n) {
        PartyPermutation gen(n);
        for (int q = 0; q < n; ++q) gen[q] = (q + n - 1) % n;
        std::vector<PartyPermutation> elems;
        PartyPermutation g = perm_identity(n);
        for (int i = 0; i < n; ++i) {
            elems.push_back(g);
            g = perm_compose(gen, g);
        }
        return PermutationGroup(std::move(elems));
    }

    /// {identity, swap of parties i and j} inside n parties.
    static PermutationGroup pair_swap(int n, int i, int j) {
        PartyPermutation t = perm_identity(n);
        std::swap(t[i], t[j]);
        return PermutationGroup({perm_identity(n), t});
    }

    const std::vector<PartyPermutation>& elements() const { return elements_; }
    std::size_t size() const { return elements_.size(); }
    int num_parties() const { return static_cast<int>(elements_.front().size()); }
    bool is_trivial() const { return elements_.size() == 1; }

private:
    void verify_closure() {
        for (const auto& g : elements_) {
            if (!std::binary_search(elements_.begin(), elements_.end(), perm_inverse(g)))
                throw std::invalid_argument("PermutationGroup: not closed under inverse");
            for (const auto& h : elements_)
                if (!std::binary_search(elements_.begin(), elements_.end(), perm_compose(g, h)))
                    throw std::invalid_argument("PermutationGroup: not closed under composition");
        }
    }

    std::vector<PartyPermutation> elements_;
};

} // namespace swapcert
