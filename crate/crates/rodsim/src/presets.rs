//! Named benchmark scenarios.

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "roll_up",
        description: "cantilever rolled into a closed circle by a tip moment 2πEI/L",
        text: "\
name = roll_up
job = static
rod.degree = 2
rod.continuity = 1
rod.elements = 40
rod.length = 40
rod.direction = 0,0,1
rod.support_start = clamped
rod.support_end = free
rod.section = direct
rod.ea = 100
rod.ei = 200
rod.a_rho = 1
rod.i_rho = 0
load.1 = tip_moment moment=0,31.41592653589793,0
statics.load_steps = 6
",
    },
    Preset {
        name: "roll_up_convergence",
        description: "mesh refinement of the roll-up against the exact circle",
        text: "\
preset = roll_up
name = roll_up_convergence
job = convergence_sweep
statics.load_steps = 24
convergence.elements = 8,16,32,64
convergence.reference = circle
",
    },
    Preset {
        name: "clamped_2d",
        description: "clamped steel rod swinging in plane after a vanishing tip load",
        text: "\
name = clamped_2d
job = dynamic
rod.degree = 3
rod.continuity = 1
rod.elements = 20
rod.length = 10
rod.direction = 1,0,0
rod.support_start = clamped
rod.support_end = free
rod.outlier_removal = on
rod.section = circular
rod.youngs_modulus = 2e11
rod.density = 7900
rod.diameter = 0.01
load.1 = point s=10 force=0,30,0 t_c=0.5
time.dt = 0.005
time.t_end = 20
output.probes = 10
",
    },
    Preset {
        name: "clamped_2d_half_load",
        description: "clamped rod under half the tip load over 100 s with a kinetic-energy spectrum",
        text: "\
preset = clamped_2d
name = clamped_2d_half_load
load.1 = point s=10 force=0,15,0 t_c=0.5
time.t_end = 100
fft.enabled = true
fft.threshold = 40
fft.window = rectangular
fft.band_min_hz = 10
",
    },
    Preset {
        name: "unconstrained_3d",
        description: "free-free steel rod kicked by four vanishing point loads",
        text: "\
name = unconstrained_3d
job = dynamic
rod.degree = 3
rod.continuity = 1
rod.elements = 20
rod.length = 10
rod.direction = 1,0,0
rod.support_start = free
rod.support_end = free
rod.outlier_removal = off
rod.section = circular
rod.youngs_modulus = 2e11
rod.density = 7900
rod.diameter = 0.005
load.1 = point s=0 force=-30,-30,0 t_c=0.5
load.2 = point s=10 force=30,30,0 t_c=0.5
load.3 = point s=0.5 force=0,0,-24 t_c=0.5
load.4 = point s=9.5 force=0,0,24 t_c=0.5
time.dt = 0.001
time.t_end = 2
output.probes = 0,5,10
",
    },
    Preset {
        name: "mass_alpha_sweep",
        description: "unconstrained rod rerun with scaled rotary inertia",
        text: "\
preset = unconstrained_3d
name = mass_alpha_sweep
rod.alpha = 1
dynamics.alpha_sweep = 0,0.25,0.5,0.75
output.stride = 10
",
    },
    Preset {
        name: "swinging_gravity",
        description: "rubber rod released horizontally under gravity",
        text: "\
name = swinging_gravity
job = dynamic
rod.degree = 3
rod.continuity = 1
rod.elements = 20
rod.length = 1
rod.direction = 1,0,0
rod.support_start = pinned
rod.support_end = free
rod.outlier_removal = on
rod.section = circular
rod.youngs_modulus = 5e6
rod.density = 1100
rod.diameter = 0.01
load.1 = gravity g=0,-9.81,0
time.dt = 0.01
time.t_end = 5
output.probes = 0.5,1
",
    },
    Preset {
        name: "swinging_wind",
        description: "rubber rod swinging under gravity in a rotating wind",
        text: "\
preset = swinging_gravity
name = swinging_wind
rod.direction = 0.9659258262890683,0,-0.25881904510252074
load.2 = flow c_m=1 c_n=1.2 c_t=0.1 rho_f=1.225 diameter=0.01 profile=rotating v0=10 beta0=0.7853981633974483 profile_length=1
time.t_end = 30
",
    },
    Preset {
        name: "pulsating_sweep",
        description: "hanging aluminium rod in water driven by a pulsating tip force",
        text: "\
name = pulsating_sweep
job = frequency_sweep
rod.degree = 3
rod.continuity = 1
rod.elements = 20
rod.length = 250
rod.direction = 0,-1,0
rod.support_start = pinned
rod.support_end = free
rod.outlier_removal = on
rod.section = circular
rod.youngs_modulus = 7e10
rod.density = 2700
rod.diameter = 0.04
load.1 = gravity g=0,-9.81,0
load.2 = flow c_m=1 c_n=1.2 c_t=0.1 rho_f=1000 diameter=0.04 profile=still
load.3 = pulsating s=250 amplitude=350000 frequency_hz=1 convention=printed direction=1,0,0
time.dt = 0.01
time.t_end = 200
frequency.frequencies_hz = 0.1,0.5,0.88,2,3,4.9,6,8
frequency.window = 100
frequency.long_run = false
frequency.long_run_t_end = 1000
frequency.probe_s = 250
frequency.component = x
",
    },
    Preset {
        name: "pendulum_free",
        description: "elastic pendulum without gravity",
        text: "\
name = pendulum_free
job = pendulum
pendulum.l0 = 1
pendulum.k = 5328.5
pendulum.mass = 1
pendulum.g = 0
pendulum.theta = 0
pendulum.eta = 0.1
pendulum.theta_dot = -0.5
pendulum.eta_dot = 0.25
pendulum.wind = off
pendulum.precision_quotient = true
time.dt = 0.005
time.t_end = 30
",
    },
    Preset {
        name: "pendulum_wind",
        description: "elastic pendulum released horizontally under gravity and a parabolic wind",
        text: "\
name = pendulum_wind
job = pendulum
pendulum.l0 = 1
pendulum.k = 5328.5
pendulum.mass = 1
pendulum.g = 9.81
pendulum.theta = 1.5707963267948966
pendulum.eta = 0
pendulum.theta_dot = 0
pendulum.eta_dot = 0
pendulum.wind = parabolic
pendulum.wind_c = 1
pendulum.wind_modulation = 0.1
pendulum.wind_omega = 0.23235531563495523
pendulum.wind_drag = 2
time.dt = 0.005
time.t_end = 30
",
    },
    Preset {
        name: "det_probe",
        description: "determinant of the linear one-step propagator over time steps, meshes and bases",
        text: "\
name = det_probe
job = det_probe
probe.dts = 0.0025,0.005,0.01
probe.elements = 2,4,8,16,32
probe.bases = hermite,spline,spline_outlier
probe.degree = 3
probe.continuity = 1
probe.length = 10
probe.section = circular
probe.youngs_modulus = 2e11
probe.density = 7900
probe.diameter = 0.01
",
    },
];

/// Text of a named preset.
pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.text)
}
