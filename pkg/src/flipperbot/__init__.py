"""flipperbot: desk-scale simulator and autonomy stack for a four-flipper
underwater robot with gait-modulation control, stereo obstacle avoidance
and human-in-the-loop target tracking."""

__version__ = "0.1.0"
