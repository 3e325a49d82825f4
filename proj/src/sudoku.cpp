#include "prdiag/sudoku.hpp"

#include <stdexcept>
#include <vector>

#include "prdiag/rng.hpp"

namespace prdiag {

namespace {

int box_of(int r, int c) { return (r / 3) * 3 + c / 3; }

struct Masks {
    std::uint16_t row[9] = {};
    std::uint16_t col[9] = {};
    std::uint16_t box[9] = {};

    explicit Masks(const Grid9& g) {
        for (int r = 0; r < 9; ++r)
            for (int c = 0; c < 9; ++c) {
                int d = g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                if (d != 0) place(r, c, d);
            }
    }

    std::uint16_t candidates(int r, int c) const {
        return static_cast<std::uint16_t>(0x1ff & ~(row[r] | col[c] | box[box_of(r, c)]));
    }
    void place(int r, int c, int d) {
        std::uint16_t bit = static_cast<std::uint16_t>(1 << (d - 1));
        row[r] |= bit;
        col[c] |= bit;
        box[box_of(r, c)] |= bit;
    }
    void remove(int r, int c, int d) {
        std::uint16_t bit = static_cast<std::uint16_t>(~(1 << (d - 1)));
        row[r] &= bit;
        col[c] &= bit;
        box[box_of(r, c)] &= bit;
    }
};

// Count completions up to `limit`, choosing the most constrained empty cell
// at each step. `first` captures the first completion when non-null.
int count_rec(Grid9& g, Masks& m, int limit, Grid9* first) {
    int best_r = -1, best_c = -1, best_n = 10;
    std::uint16_t best_cand = 0;
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            if (g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] != 0) continue;
            std::uint16_t cand = m.candidates(r, c);
            int n = __builtin_popcount(cand);
            if (n == 0) return 0;
            if (n < best_n) {
                best_n = n;
                best_r = r;
                best_c = c;
                best_cand = cand;
                if (n == 1) goto chosen;
            }
        }
    if (best_r < 0) {
        if (first) *first = g;
        return 1;
    }
chosen:
    int found = 0;
    for (int d = 1; d <= 9; ++d) {
        if (!(best_cand & (1 << (d - 1)))) continue;
        g[static_cast<std::size_t>(best_r)][static_cast<std::size_t>(best_c)] =
            static_cast<std::uint8_t>(d);
        m.place(best_r, best_c, d);
        found += count_rec(g, m, limit - found, (first && found == 0) ? first : nullptr);
        m.remove(best_r, best_c, d);
        g[static_cast<std::size_t>(best_r)][static_cast<std::size_t>(best_c)] = 0;
        if (found >= limit) return found;
    }
    return found;
}

bool fill_random(Grid9& g, Masks& m, int cell, Rng& rng) {
    if (cell == 81) return true;
    int r = cell / 9, c = cell % 9;
    std::uint16_t cand = m.candidates(r, c);
    std::vector<int> digits;
    for (int d = 1; d <= 9; ++d)
        if (cand & (1 << (d - 1))) digits.push_back(d);
    rng.shuffle(digits);
    for (int d : digits) {
        g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(d);
        m.place(r, c, d);
        if (fill_random(g, m, cell + 1, rng)) return true;
        m.remove(r, c, d);
        g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = 0;
    }
    return false;
}

}  // namespace

bool is_valid_solution(const Grid9& grid) {
    for (int i = 0; i < 9; ++i) {
        std::uint16_t row = 0, col = 0, box = 0;
        for (int j = 0; j < 9; ++j) {
            int dr = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            int dc = grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            int db = grid[static_cast<std::size_t>((i / 3) * 3 + j / 3)]
                         [static_cast<std::size_t>((i % 3) * 3 + j % 3)];
            if (dr < 1 || dr > 9 || dc < 1 || dc > 9 || db < 1 || db > 9) return false;
            row |= static_cast<std::uint16_t>(1 << (dr - 1));
            col |= static_cast<std::uint16_t>(1 << (dc - 1));
            box |= static_cast<std::uint16_t>(1 << (db - 1));
        }
        if (row != 0x1ff || col != 0x1ff || box != 0x1ff) return false;
    }
    return true;
}

bool solution_extends(const Grid9& givens, const Grid9& solution) {
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            auto g = givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (g != 0 && g != solution[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)])
                return false;
        }
    return true;
}

namespace {

// Direct conflicts (or out-of-range digits) among the givens themselves.
bool givens_conflict(const Grid9& givens) {
    Masks check{Grid9{}};
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            int d = givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (d == 0) continue;
            if (d > 9 || !(check.candidates(r, c) & (1 << (d - 1)))) return true;
            check.place(r, c, d);
        }
    return false;
}

}  // namespace

int count_solutions(const Grid9& givens, int limit) {
    if (givens_conflict(givens)) return 0;
    Masks m{givens};
    Grid9 work = givens;
    return count_rec(work, m, limit, nullptr);
}

std::optional<Grid9> solve_first(const Grid9& givens) {
    if (givens_conflict(givens)) return std::nullopt;
    Masks m{givens};
    Grid9 work = givens;
    Grid9 first{};
    if (count_rec(work, m, 1, &first) == 0) return std::nullopt;
    return first;
}

SudokuInstance gen_sudoku(int target_givens, std::uint64_t seed, bool require_unique) {
    if (target_givens < 17 || target_givens > 81)
        throw std::invalid_argument("gen_sudoku: target_givens must be in [17, 81]");

    Rng rng(mix_seed(seed, 0x7375646f6b752121ULL));
    SudokuInstance inst;
    inst.seed = seed;

    Grid9 full{};
    Masks m{full};
    if (!fill_random(full, m, 0, rng))
        throw std::runtime_error("gen_sudoku: failed to build a full grid");
    inst.solution = full;
    inst.givens = full;

    std::vector<int> cells(81);
    for (int i = 0; i < 81; ++i) cells[static_cast<std::size_t>(i)] = i;
    rng.shuffle(cells);

    int remaining = 81;
    bool progress = true;
    while (remaining > target_givens && progress) {
        progress = false;
        for (int cell : cells) {
            if (remaining <= target_givens) break;
            int r = cell / 9, c = cell % 9;
            auto& slot = inst.givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (slot == 0) continue;
            std::uint8_t saved = slot;
            slot = 0;
            if (require_unique && count_solutions(inst.givens, 2) != 1) {
                slot = saved;
                continue;
            }
            --remaining;
            progress = true;
        }
    }
    return inst;
}

}  // namespace prdiag
