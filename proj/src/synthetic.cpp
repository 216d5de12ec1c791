#include "morphforge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "morphforge/image_io.hpp"
#include "morphforge/rng.hpp"

namespace morphforge::cli {

namespace {

using imagekit::Point;

double smoothstep(double edge0, double edge1, double x) {
    const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct Blotch {
    double x, y, sigma, amp;
};

}  // namespace

std::pair<Image, LandmarkSet> synth_face(std::uint64_t seed, int size, Gender gender) {
    rng::Engine g(seed);
    const double s = static_cast<double>(size);

    // Structural parameters, drawn in a fixed order.
    const double tilt = rng::uniform(g, -0.06, 0.06);
    const double cx = s * (0.5 + rng::uniform(g, -0.02, 0.02));
    const double cy = s * (0.5 + rng::uniform(g, -0.02, 0.02));
    double a = s * rng::uniform(g, 0.27, 0.32);
    const double b = s * rng::uniform(g, 0.36, 0.42);
    if (gender == Gender::F) a *= 0.96;

    const double skin_r = rng::uniform(g, 0.62, 0.80);
    const double skin_g = skin_r * rng::uniform(g, 0.78, 0.86);
    const double skin_b = skin_g * rng::uniform(g, 0.78, 0.88);

    const double eye_dx = a * rng::uniform(g, 0.40, 0.50);
    const double eye_dy = -b * rng::uniform(g, 0.18, 0.26);
    const double eye_r = a * rng::uniform(g, 0.09, 0.12);
    const double iris_tone = rng::uniform(g, 0.10, 0.35);
    const double iris_blue = rng::uniform(g, 0.0, 0.25);

    const double brow_dy = eye_dy - b * rng::uniform(g, 0.13, 0.19);
    const double brow_half = a * rng::uniform(g, 0.15, 0.21);
    const double brow_thick = s * rng::uniform(g, 0.010, 0.018);
    const double brow_tone = rng::uniform(g, 0.10, 0.30);
    const double brow_slope = rng::uniform(g, -0.10, 0.10);

    const double nose_y = b * rng::uniform(g, 0.08, 0.14);
    const double nose_tone = rng::uniform(g, 0.04, 0.09);

    const double mouth_y = b * rng::uniform(g, 0.42, 0.50);
    const double mouth_half = a * rng::uniform(g, 0.19, 0.27);
    const double mouth_thick = s * rng::uniform(g, 0.014, 0.026);
    const double lip_r = rng::uniform(g, 0.48, 0.66);

    const double bg = rng::uniform(g, 0.78, 0.90);
    const double bg_slope = rng::uniform(g, -0.05, 0.05);

    std::vector<Blotch> blotches(8);
    for (auto& bl : blotches) {
        bl.x = rng::uniform(g, -0.7, 0.7) * a;
        bl.y = rng::uniform(g, -0.7, 0.7) * b;
        bl.sigma = s * rng::uniform(g, 0.04, 0.12);
        bl.amp = rng::uniform(g, -0.05, 0.05);
    }
    const double grain_amp = rng::uniform(g, 0.035, 0.055);

    const double ct = std::cos(tilt);
    const double st = std::sin(tilt);

    Image img(size, size, 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            // Face-local frame: un-tilt the query point.
            const double dx = x - cx;
            const double dy = y - cy;
            const double lx = ct * dx + st * dy;
            const double ly = -st * dx + ct * dy;

            double r = bg + bg_slope * (y / s - 0.5);
            double gg = r * 0.98;
            double bb = r * 0.96;

            const double d = (lx / a) * (lx / a) + (ly / b) * (ly / b);
            const double face = 1.0 - smoothstep(0.92, 1.05, d);
            if (face > 0.0) {
                // Shaded skin, darker toward the jaw.
                const double shade = 1.0 - 0.18 * std::max(0.0, ly / b) - 0.10 * d;
                double fr = skin_r * shade;
                double fg = skin_g * shade;
                double fb = skin_b * shade;

                for (const auto& bl : blotches) {
                    const double bd = ((lx - bl.x) * (lx - bl.x) + (ly - bl.y) * (ly - bl.y)) /
                                      (2.0 * bl.sigma * bl.sigma);
                    if (bd < 12.0) {
                        const double add = bl.amp * std::exp(-bd);
                        fr += add;
                        fg += add;
                        fb += add;
                    }
                }

                for (int side = -1; side <= 1; side += 2) {
                    const double ex = lx - side * eye_dx;
                    const double ey = ly - eye_dy;
                    // Sclera.
                    const double sd = (ex / (1.45 * eye_r)) * (ex / (1.45 * eye_r)) +
                                      (ey / (0.85 * eye_r)) * (ey / (0.85 * eye_r));
                    const double sclera = 1.0 - smoothstep(0.8, 1.1, sd);
                    if (sclera > 0.0) {
                        fr = fr * (1.0 - sclera) + 0.93 * sclera;
                        fg = fg * (1.0 - sclera) + 0.93 * sclera;
                        fb = fb * (1.0 - sclera) + 0.93 * sclera;
                    }
                    // Iris and pupil.
                    const double id2 = (ex * ex + ey * ey) / (0.55 * eye_r * 0.55 * eye_r);
                    const double iris = 1.0 - smoothstep(0.7, 1.15, id2);
                    if (iris > 0.0) {
                        fr = fr * (1.0 - iris) + iris_tone * iris;
                        fg = fg * (1.0 - iris) + iris_tone * iris;
                        fb = fb * (1.0 - iris) + (iris_tone + iris_blue) * iris;
                    }
                    const double pd2 = (ex * ex + ey * ey) / (0.22 * eye_r * 0.22 * eye_r);
                    const double pupil = 1.0 - smoothstep(0.6, 1.2, pd2);
                    if (pupil > 0.0) {
                        fr = fr * (1.0 - pupil) + 0.05 * pupil;
                        fg = fg * (1.0 - pupil) + 0.05 * pupil;
                        fb = fb * (1.0 - pupil) + 0.05 * pupil;
                    }
                    // Brow: a slightly sloped capsule above the eye.
                    const double bx = lx - side * eye_dx;
                    const double by = ly - (brow_dy + side * brow_slope * bx);
                    if (std::abs(bx) < brow_half) {
                        const double t = 1.0 - smoothstep(0.5 * brow_thick, 1.1 * brow_thick, std::abs(by));
                        const double fade = 1.0 - smoothstep(0.7 * brow_half, brow_half, std::abs(bx));
                        const double w = t * fade;
                        if (w > 0.0) {
                            fr = fr * (1.0 - w) + brow_tone * w;
                            fg = fg * (1.0 - w) + brow_tone * w;
                            fb = fb * (1.0 - w) + brow_tone * w;
                        }
                    }
                }

                // Nose shadow: a soft vertical ridge down to the tip.
                if (ly > eye_dy && ly < nose_y + 0.06 * b) {
                    const double w = (1.0 - smoothstep(0.015 * s, 0.05 * s, std::abs(lx))) * nose_tone;
                    fr -= w;
                    fg -= w;
                    fb -= w;
                }

                // Mouth capsule.
                {
                    const double mx = lx;
                    const double my = ly - mouth_y;
                    const double t = 1.0 - smoothstep(0.5 * mouth_thick, 1.2 * mouth_thick, std::abs(my));
                    const double fade = 1.0 - smoothstep(0.75 * mouth_half, mouth_half, std::abs(mx));
                    const double w = t * fade;
                    if (w > 0.0) {
                        fr = fr * (1.0 - w) + lip_r * w;
                        fg = fg * (1.0 - w) + 0.30 * lip_r * w;
                        fb = fb * (1.0 - w) + 0.32 * lip_r * w;
                    }
                }

                r = r * (1.0 - face) + fr * face;
                gg = gg * (1.0 - face) + fg * face;
                bb = bb * (1.0 - face) + fb * face;
            }

            img.at(x, y, 0) = std::clamp(r, 0.0, 1.0);
            img.at(x, y, 1) = std::clamp(gg, 0.0, 1.0);
            img.at(x, y, 2) = std::clamp(bb, 0.0, 1.0);
        }
    }

    // Per-subject skin grain: the high-frequency signature that blending
    // attenuates. Drawn last so the structural draws above stay stable.
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double noise = rng::uniform(g, -1.0, 1.0) * grain_amp;
            const double dx = x - cx;
            const double dy = y - cy;
            const double lx = ct * dx + st * dy;
            const double ly = -st * dx + ct * dy;
            const double d = (lx / a) * (lx / a) + (ly / b) * (ly / b);
            const double face = 1.0 - smoothstep(0.85, 1.0, d);
            if (face <= 0.0) continue;
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = std::clamp(img.at(x, y, c) + noise * face, 0.0, 1.0);
        }

    // Landmarks in the global frame.
    auto global = [&](double lx, double ly) {
        return Point{cx + ct * lx - st * ly, cy + st * lx + ct * ly};
    };
    auto clamp_pt = [&](Point p) {
        return Point{std::clamp(p.x, 1.0, s - 2.0), std::clamp(p.y, 1.0, s - 2.0)};
    };
    LandmarkSet lm;
    lm.set("eye_left", clamp_pt(global(-eye_dx, eye_dy)));
    lm.set("eye_right", clamp_pt(global(eye_dx, eye_dy)));
    lm.set("brow_left_outer", clamp_pt(global(-eye_dx - brow_half, brow_dy + brow_slope * brow_half)));
    lm.set("brow_left_inner", clamp_pt(global(-eye_dx + brow_half, brow_dy - brow_slope * brow_half)));
    lm.set("brow_right_inner", clamp_pt(global(eye_dx - brow_half, brow_dy - brow_slope * brow_half)));
    lm.set("brow_right_outer", clamp_pt(global(eye_dx + brow_half, brow_dy + brow_slope * brow_half)));
    lm.set("nose_tip", clamp_pt(global(0.0, nose_y)));
    lm.set("mouth_left", clamp_pt(global(-mouth_half, mouth_y)));
    lm.set("mouth_right", clamp_pt(global(mouth_half, mouth_y)));
    lm.set("mouth_top", clamp_pt(global(0.0, mouth_y - mouth_thick)));
    lm.set("mouth_bottom", clamp_pt(global(0.0, mouth_y + 1.2 * mouth_thick)));
    lm.set("chin", clamp_pt(global(0.0, 0.92 * b)));
    lm.set("jaw_left", clamp_pt(global(-0.78 * a, 0.55 * b)));
    lm.set("jaw_right", clamp_pt(global(0.78 * a, 0.55 * b)));
    lm.set("forehead_mid", clamp_pt(global(0.0, -0.72 * b)));
    return {std::move(img), std::move(lm)};
}

Manifest generate_dataset(const std::string& out_dir, int subjects, int size, std::uint64_t seed) {
    if (subjects < 1) throw InvalidArgument("generate_dataset: subjects must be >= 1");
    std::filesystem::create_directories(out_dir);

    rng::Engine master(seed);
    Manifest manifest;
    char buf[64];
    for (int i = 0; i < subjects; ++i) {
        const std::uint64_t subject_seed = master();
        const Gender gender = i % 2 == 0 ? Gender::M : Gender::F;
        const std::string db = (i / 2) % 2 == 0 ? "synth_a" : "synth_b";
        auto [img, lm] = synth_face(subject_seed, size, gender);

        std::snprintf(buf, sizeof(buf), "s%04d", i);
        const std::string id = buf;
        const std::string img_rel = id + ".png";
        const std::string lm_rel = id + ".landmarks.txt";
        imagekit::save_image(img, out_dir + "/" + img_rel);
        imagekit::save_landmarks(lm, out_dir + "/" + lm_rel);

        ManifestEntry e;
        e.id = id;
        e.image_path = img_rel;
        e.landmarks_path = lm_rel;
        e.subject_id = "subj" + id.substr(1);
        e.gender = gender;
        e.source_db = db;
        e.split = Split::Unassigned;
        manifest.push_back(std::move(e));
    }
    save_manifest(manifest, out_dir + "/manifest.csv");
    return manifest;
}

}  // namespace morphforge::cli
