#include "seqmem/tasks.hpp"

#include <cmath>
#include <random>

namespace seqmem {

SequenceDataset gen_sequence_task(std::uint64_t seed, int length) {
    require(length >= 1, "gen_sequence_task: length must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> amp(0.5, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Incommensurate base frequencies spanning slow drift to fast ripple.
    // Amplitudes fall off with frequency so the slow components dominate the
    // spectrum while the fast ripple keeps short-range structure.
    const double freqs[5] = {0.011, 0.029 * std::sqrt(2.0), 0.061,
                             0.083 * std::sqrt(3.0), 0.21};
    const double falloff[5] = {1.0, 0.8, 0.55, 0.3, 0.15};
    double a[5], ph[5];
    for (int i = 0; i < 5; ++i) {
        a[i] = amp(rng) * falloff[i];
        ph[i] = phase(rng);
    }

    Vector target(length);
    for (int t = 0; t < length; ++t) {
        double v = 0.0;
        for (int i = 0; i < 5; ++i)
            v += a[i] * std::sin(2.0 * M_PI * freqs[i] * t + ph[i]);
        target(t) = v + 0.02 * noise(rng);
    }
    const double lo = target.minCoeff();
    const double hi = target.maxCoeff();
    require(hi > lo, "gen_sequence_task: degenerate signal");
    target = (2.0 * (target.array() - lo) / (hi - lo) - 1.0).matrix();

    Sequence seq;
    seq.inputs = Matrix(length, 0);
    seq.targets = target;
    seq.split = Split::Train;

    SequenceDataset ds;
    ds.sequences.push_back(std::move(seq));
    return ds;
}

SequenceDataset gen_pianoroll_task(std::uint64_t seed, int n_sequences, int length,
                                   int n_notes) {
    require(n_sequences >= 1 && length >= 2 && n_notes >= 1,
            "gen_pianoroll_task: positive sizes required");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_motifs_dist(2, 4);
    std::uniform_int_distribution<int> motif_len_dist(3, 6);
    std::uniform_int_distribution<int> notes_per_frame(1, std::min(4, n_notes));
    std::uniform_int_distribution<int> note_dist(0, n_notes - 1);

    // One motif bank per dataset: every sequence cycles the same patterns in
    // its own order, so the transition structure seen at training time is the
    // same one that has to be predicted on held-out sequences.
    const int n_motifs = n_motifs_dist(rng);
    std::vector<Matrix> motifs;
    for (int m = 0; m < n_motifs; ++m) {
        const int ml = motif_len_dist(rng);
        Matrix motif = Matrix::Zero(ml, n_notes);
        for (int t = 0; t < ml; ++t) {
            const int k = notes_per_frame(rng);
            for (int i = 0; i < k; ++i) motif(t, note_dist(rng)) = 1.0;
        }
        motifs.push_back(std::move(motif));
    }

    SequenceDataset ds;
    for (int q = 0; q < n_sequences; ++q) {

        // Concatenate each motif repeated a few times, then trim / cycle to
        // length + 1 frames (input and one-step-ahead target views).
        Matrix roll = Matrix::Zero(length + 1, n_notes);
        int row = 0;
        std::uniform_int_distribution<int> reps_dist(2, 4);
        while (row < length + 1) {
            for (const auto& motif : motifs) {
                const int reps = reps_dist(rng);
                for (int r = 0; r < reps && row < length + 1; ++r)
                    for (int t = 0; t < motif.rows() && row < length + 1; ++t)
                        roll.row(row++) = motif.row(t);
                if (row >= length + 1) break;
            }
        }

        Sequence seq;
        seq.inputs = roll.topRows(length);
        seq.targets = roll.bottomRows(length);
        // round-robin split: train-heavy with a val and test tail
        const int r = q % 10;
        seq.split = r < 7 ? Split::Train : (r < 9 ? Split::Val : Split::Test);
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

}  // namespace seqmem
