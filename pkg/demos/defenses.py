"""Countermeasures compared on the same recording.

* Faster row readout shrinks the captured fraction of each frame period.
* Random-coded readout scrambles the row-to-time mapping an attacker assumes.
* Locking the lens leaves only the (about 21x smaller) body motion.
* A stiffer spring needs a stronger actuator to keep the same sensitivity.
"""


from rsacoustic import SensorGeometry, extract, preset, recover, simulate, synth_tone
from rsacoustic.defense import (VcmDesign, compensate_stiffer_spring, evaluate_random_coded,
                                lens_lock, simulate_sample_rate, vcm_sensitivity)
from rsacoustic.metrics import band_snr_db
from rsacoustic.pipeline import tone_response
from rsacoustic.recovery import PreprocessConfig
from rsacoustic.renderer import motion_to_pixels, texture_scene
from rsacoustic.signal import MechanicalPath, audio_to_lens_motion

_, timing = preset("pixel2")
geom = SensorGeometry(1080, 32)

print("sample-rate scaling")
sim = simulate(synth_tone(490, 1.05, 48000), geom, timing, spl=80, K=30, noise_std=0.01)
ch = extract(sim.frames, reference=sim.scene.crop())
rec, _ = recover(ch, PreprocessConfig(denoise=False, liveness=False, trim=False))
for sr in (34e3, 65e3, 324e3, 648e3):
    w = simulate_sample_rate(rec.samples, sr, 1080, 30.0, timing.row_rate)
    print(f"  {sr / 1e3:5.0f} kHz  band SNR {band_snr_db(w, sr, 490, sr / 1080):5.1f} dB")

print("random-coded readout")
tone = synth_tone(500, 0.4, 48000)
motion = motion_to_pixels(audio_to_lens_motion(tone, MechanicalPath(), 80, step=timing.step),
                          geom)
scene = texture_scene(1080, 32, margin=4, seed=0)
r = evaluate_random_coded(scene, motion, timing, 1, 500, K=10, reference=scene.crop(),
                          noise_std=0.01)
for mode, res in r.items():
    print(f"  {mode:12s} peak {res['dominant_freq_hz']:6.1f} Hz, "
          f"500 Hz ratio {res['peak_to_background_db']:5.1f} dB")

print("lens locking")
small = SensorGeometry(96, 480)
lens = audio_to_lens_motion(synth_tone(200, 7 / 30, 48000), MechanicalPath(), 83.8,
                            step=timing.step)
free, _ = tone_response(200, small, timing, K=6, pixel_motion=motion_to_pixels(lens, small))
locked, _ = tone_response(200, small, timing, K=6, pixel_motion=lens_lock(lens, 0.0, small,
                                                                          body=lens))
print(f"  free {free:.2f} px, locked {locked:.3f} px, ratio {free / locked:.1f}")

print("stiffer spring")
base = VcmDesign(R=10, V=2, f_fric=0.001, c_l=40, x=1e-4, m=0.001, N_w=10, l_w=0.01,
                 B_g=0.5, A_coil=2e-8, rho=2e-8, L_coil=5)
for name, design in compensate_stiffer_spring(base, 80).items():
    res = vcm_sensitivity(design)
    print(f"  c_l 40 -> 80 via {name:6s} = {getattr(design, name):.3g}: S {res.S:.2f}, "
          f"F_e {res.F_e:.3f} N")
print(f"  baseline S {vcm_sensitivity(base).S:.2f}")
