"""emt-lab: elastic moment tensors and boundary asymptotics of thin inclusions."""

__all__: list[str] = []
